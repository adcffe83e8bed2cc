"""phonoon: two-mode phonon NOON-state generation and metrology simulator."""

from .hilbert import (
    DOWN,
    UP,
    DensityMatrix,
    HilbertSpace,
    Operator,
    StateVector,
    basis_state,
    expectation,
    make_space,
    mode_operator,
    noon_state,
    space_for_noon,
)
from .hamiltonians import (
    PAPER_SYSTEM,
    HamiltonianTerm,
    SystemConfig,
    carrier_h,
    laguerre_rabi,
    offresonant_h,
    output_drive_h,
    sideband_h,
)
from .pulses import (
    Carrier,
    Composite,
    PulseSequence,
    Sideband,
    ShapedSideband,
    apply_carrier,
    apply_sequence,
    apply_sideband,
    composite,
    format_sequence,
    generate_noon,
    noon_fidelity,
    noon_phase,
    noon_sequence,
    parse_sequence,
    shaped_envelope,
)
from .evolve import HermitianPropagator, PropagatorResult, evolve_const, evolve_timedep
from .measure import (
    FluorescenceSignal,
    ParityScan,
    PhononFit,
    align_phase,
    beam_splitter,
    find_optimal_duration,
    fit_phonon_distribution,
    fluorescence_signal,
    output_parity_from_fit,
    parity_expect,
    parity_scan,
    projective_population,
)
from .metrology import (
    FringeFit,
    MetrologyReport,
    NoonDensityModel,
    fidelity,
    fit_parity_fringe,
    qfi_closed,
    qfi_sld,
    schwinger_ops,
)
from .noise import NoiseConfig, noisy_generation, op_success_channel, sample_detuning

__version__ = "0.1.0"
