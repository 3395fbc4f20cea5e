"""macrolab: a seeded agent-based macroeconomy with a laboratory for
phase diagrams, shock experiments and parameter-sloppiness analysis.

The economy is a closed system of heterogeneous firms facing an aggregate
household.  Firms adjust production, prices and wages by rules of thumb;
money is strictly conserved through sales, payroll, interest, dividends,
bankruptcies and revivals.  A central-bank layer adds inflation
expectations, trust dynamics, a Taylor rule and its transmission
channels.  On top sit tools that classify long-run regimes, sweep 2-D
parameter planes into phase maps, and probe stiffness/sloppiness of the
dynamics via log-parameter Hessian spectra and stiff-direction walks.
"""

__version__ = "0.1.0"

from .economy import (  # noqa: F401
    EconomyCollapsed,
    EconomyState,
    StepRecord,
    Trajectory,
    init_economy,
    simulate,
    step,
)
from .params import (  # noqa: F401
    ClassifierThresholds,
    MarketParams,
    ParameterError,
    PolicyParams,
    replace,
)
from .phases import PhaseLabel, TrajectorySummary, classify_phase, summarize  # noqa: F401
from .shocks import ShockEvent, ShockSchedule, covid_shock, effective_params  # noqa: F401
from .sloppy import (  # noqa: F401
    ObservableProtocol,
    SimulatorEvaluator,
    SpectrumReport,
    WalkPath,
    eigen_spectrum,
    gauss_newton_hessian,
    isotropic_walk,
    log_jacobian,
    loss,
    observable_vector,
    stiff_walk,
)
from .sweep import AxisSpec, PhaseMap, SweepSpec, sweep2d  # noqa: F401
