import numpy as np
import pytest

from partialchan.envmap import CellClass, EnvironmentMap, generate_floorplan
from partialchan.kernels import available_backends

F, W, X = int(CellClass.FREE), int(CellClass.WALL), int(CellClass.EXTERIOR)


def boxed(h, w, res=0.15):
    """Free room of h x w cells inside a one-cell wall ring."""
    cells = np.full((h, w), F, dtype=np.uint8)
    cells[0, :] = cells[-1, :] = cells[:, 0] = cells[:, -1] = W
    return EnvironmentMap(cells, res)


def two_rooms(h=20, w=30, door=False):
    """Boxed map split by a vertical wall at column w // 2."""
    env = boxed(h, w)
    cells = env.cells.copy()
    cells[:, w // 2] = W
    if door:
        cells[h // 2 - 2: h // 2 + 2, w // 2] = F
    return EnvironmentMap(cells, env.resolution)


def random_free_points(env, rng, n):
    """n world points jittered inside uniformly chosen free cells."""
    free = np.argwhere(env.cells == F)
    idx = free[rng.integers(len(free), size=n)]
    jit = rng.uniform(0.05, 0.95, size=(n, 2))
    return [(env.origin[0] + (j + a) * env.resolution, env.origin[1] + (i + b) * env.resolution)
            for (i, j), (a, b) in zip(idx, jit)]


@pytest.fixture(scope="session")
def maps20():
    return [generate_floorplan(s) for s in range(20)]


@pytest.fixture(params=sorted(available_backends()))
def backend(request):
    return available_backends()[request.param]
