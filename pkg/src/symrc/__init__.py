"""symrc: continuous-time echo state networks with symmetry-matching transforms.

The package splits into a core library (reservoir, readout, tasks, pipelines,
hyperopt, harness), a FastAPI service wrapping the harness, and a thin CLI
client for the service.
"""

__version__ = "0.1.0"

from .reservoir import HyperParams, ReservoirMachine  # noqa: E402,F401
from .tasks import BitSeries, LorenzDataset  # noqa: E402,F401
