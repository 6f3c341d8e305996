from ricci_engine.routes import cli

cli(prog_name="ricci-engine")
