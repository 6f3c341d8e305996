import math
from dataclasses import dataclass, field


@dataclass
class Check:
    """One named verification: passes when the residual is finite and below tol."""
    name: str
    residual: float
    tol: float
    passed: bool = None

    def __post_init__(self):
        self.residual = float(self.residual)
        self.tol = float(self.tol)
        if self.passed is None:
            self.passed = math.isfinite(self.residual) and self.residual < self.tol

    @classmethod
    def flag(cls, name, ok):
        """A yes/no property recorded as residual 0 (holds) or 1 (fails) against tol 0.5."""
        return cls(name, 0.0 if ok else 1.0, 0.5)

    def get_check_info(self):
        return {
            "name": self.name,
            "residual": self.residual if math.isfinite(self.residual) else None,
            "tol": self.tol,
            "pass": self.passed
        }


@dataclass
class Report:
    command: str
    seed: int
    samples: int
    checks: list = field(default_factory=list)
    config: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)
    timing: float = None

    @property
    def passed(self):
        return all(check.passed for check in self.checks)

    def failures(self):
        return [check for check in self.checks if not check.passed]

    def get_report_info(self, with_timing=True):
        report_info = {
            "command": self.command,
            "pass": self.passed,
            "checks": [check.get_check_info() for check in self.checks],
            "seed": self.seed,
            "samples": self.samples,
            "config": self.config,
            "details": self.details
        }
        if with_timing:
            report_info["timing"] = {"seconds": self.timing}
        return report_info

    def to_table(self):
        width = max([len(check.name) for check in self.checks] + [5])
        lines = [f"{self.command}: {'PASS' if self.passed else 'FAIL'} (seed {self.seed}, samples {self.samples})",
                 f"{'check'.ljust(width)}  {'residual':>12}  {'tol':>10}  pass"]
        for check in self.checks:
            residual = f"{check.residual:12.4e}" if math.isfinite(check.residual) else f"{'n/a':>12}"
            lines.append(f"{check.name.ljust(width)}  {residual}  {check.tol:10.2e}  "
                         f"{'yes' if check.passed else 'NO'}")
        return "\n".join(lines)
