"""Symmetry-sector Liouvillian analysis of U(1)-symmetric single-mode Lindblad models."""

from .errors import (
    EigensolverError,
    FrequencyError,
    LindsectorError,
    OracleGuardError,
    ParameterError,
    PropagationError,
    SectorError,
    TruncationError,
)
from .fock import (
    DiagonalHamiltonian,
    LadderJump,
    make_annihilation,
    make_incoherent_drive,
    make_number_hamiltonian,
    make_scully_lamb_decoherence,
    make_scully_lamb_gain,
    make_two_photon_loss,
)
from .models import (
    ModelSpec,
    build_btc_model,
    build_model,
    build_scully_lamb,
    semiclassical_fixed_point,
    sl_params_from_AB,
    suggest_cutoff,
)
from .sectors import (
    SectorMatrix,
    apply_symmetry_phase,
    build_full_superoperator,
    build_sector_matrix,
    sector_support,
    verify_block_equivalence,
)
from .spectra import (
    SpectrumEntry,
    SteadyState,
    compute_spectrum,
    eigendecompose,
    expectation_number,
    FrameShiftReport,
    frame_shift_check,
    frame_shift_report,
    liouvillian_gap,
    refine_eigenvalues,
    sorted_spectrum,
    steady_state,
)
from .dynamics import (
    CorrelationTrace,
    SectorVector,
    correlation_c1,
    correlation_c2,
    dominant_frequency,
    evolve_sector,
    field_trace,
)
from .sweeps import SweepRow, gap_flow, spectrum_snapshot, sweep_order_parameter

__version__ = "0.1.0"
