"""Adaptive receding-horizon control of scalar pseudo-linear input-output systems.

Online identification over basis dictionaries (directional-forgetting RLS),
iterated-relinearization horizon planning backed by a structured QP, and a
reproducible closed-loop benchmark harness with a CLI.
"""

__version__ = "0.1.0"

from . import basis, cli, config, model, mpc, plant, qp, rls, selftest  # noqa: F401
from .basis import (  # noqa: F401
    AtanPair,
    Constant,
    CubicHermiteSpline,
    Fourier,
    Polynomial,
    SinPair,
    Zero,
)
from .model import History, ModelStructure  # noqa: F401
from .mpc import HorizonConfig, RecedingHorizonController  # noqa: F401
from .plant import (  # noqa: F401
    PlantSpec,
    RunLog,
    SimConfig,
    metrics,
    preset,
    preset_names,
    run_closed_loop,
)
from .rls import DirectionalForgettingRls  # noqa: F401
