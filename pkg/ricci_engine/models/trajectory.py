from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np


class Verdict(str, Enum):
    COMPLETED = "completed"
    LEFT_DOMAIN = "left_domain"
    BLOW_UP = "blow_up"


@dataclass(frozen=True)
class GeodesicState:
    """
    One recorded sample. Scalar ODE runs keep their state in x and leave v empty.
    """
    t: float
    x: tuple
    v: tuple = ()

    def get_state_info(self):
        return {
            "t": self.t,
            "x": list(self.x),
            "v": list(self.v)
        }


@dataclass(frozen=True)
class StepControl:
    h0: float = 0.01
    tol: float = 1e-9
    h_min: float = 1e-12
    h_max: float = 0.05
    escape: float = 1e6
    exit_tol: float = 1e-6
    max_steps: int = 200000

    def halved(self):
        return replace(self, h0=self.h0 / 2, h_max=self.h_max / 2)

    def get_control_info(self):
        return {
            "h0": self.h0,
            "tol": self.tol,
            "h_min": self.h_min,
            "h_max": self.h_max,
            "escape": self.escape,
            "exit_tol": self.exit_tol
        }


@dataclass
class Trajectory:
    samples: list
    verdict: Verdict
    t_end: float
    blowup_estimate: float = None
    tracks: dict = field(default_factory=dict)
    rejected_steps: int = 0
    details: dict = field(default_factory=dict)

    @property
    def times(self):
        return np.array([state.t for state in self.samples])

    def positions(self):
        return np.array([state.x for state in self.samples])

    def velocities(self):
        return np.array([state.v for state in self.samples])

    def track(self, name):
        return np.asarray(self.tracks[name])

    def get_trajectory_info(self, with_samples=False):
        trajectory_info = {
            "verdict": self.verdict.value,
            "t_end": self.t_end,
            "blowup_estimate": self.blowup_estimate,
            "sample_count": len(self.samples),
            "rejected_steps": self.rejected_steps,
            "details": dict(self.details)
        }
        if with_samples:
            trajectory_info["samples"] = [state.get_state_info() for state in self.samples]
            trajectory_info["tracks"] = {name: list(map(float, values)) for name, values in self.tracks.items()}
        return trajectory_info

    def to_table(self):
        """Whitespace separated columns: t, coordinates, velocity, then each monitored scalar."""
        names = sorted(self.tracks)
        first = self.samples[0]
        header = (["t"] + [f"x{i}" for i in range(len(first.x))]
                  + [f"v{i}" for i in range(len(first.v))] + names)
        lines = ["  ".join(header)]
        for index, state in enumerate(self.samples):
            row = [state.t, *state.x, *state.v] + [self.tracks[name][index] for name in names]
            lines.append("  ".join(f"{value:.10g}" for value in row))
        return "\n".join(lines)
