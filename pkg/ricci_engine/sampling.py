import logging

import numpy as np

from ricci_engine.errors import DomainViolation
from ricci_engine.models.jet import Point

logger = logging.getLogger(__name__)

DEFAULT_SEED = 42
BOX_MARGIN = 1e-3


def make_rng(seed=DEFAULT_SEED):
    """64-bit PCG generator; identical seeds give identical sample sets."""
    return np.random.default_rng(seed)


def sample_points(chart, n, seed=DEFAULT_SEED, box=None, rng=None):
    """
    Input: chart, number of points, seed (or an explicit generator), optional box override
    Output: n Points drawn uniformly from the box (shrunk by BOX_MARGIN of its width)
    where every domain expression exceeds BOX_MARGIN times the widest box side
    """
    rng = rng if rng is not None else make_rng(seed)
    box = np.array(box if box is not None else chart.box, dtype=float)
    width = box[:, 1] - box[:, 0]
    lo = box[:, 0] + BOX_MARGIN * width
    hi = box[:, 1] - BOX_MARGIN * width
    margin = BOX_MARGIN * float(np.max(width))

    points = []
    draws = 0
    while len(points) < n:
        if draws > 1000 * max(n, 1):
            raise DomainViolation(f"sampling box {box.tolist()} barely meets the domain of chart {chart.id!r}")
        coords = lo + (hi - lo) * rng.random(chart.dim)
        draws += 1
        if chart.contains(coords, margin):
            points.append(Point(chart.id, coords))
    logger.debug("sampled %d points on %s with %d draws", n, chart.id, draws)
    return points


def random_directions(rng, dim, count):
    """count random vectors with components uniform in [-1, 1]."""
    return [rng.uniform(-1.0, 1.0, dim) for _ in range(count)]


def basis_and_random_directions(rng, dim, count=10):
    return list(np.eye(dim)) + random_directions(rng, dim, count)
