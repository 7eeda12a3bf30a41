"""Low-PMEPR 2^2n-QAM OFDM sequences built from PEP-thresholded QPSK families."""

from qampmepr.seqcore import (
    ComplexSequence,
    GolayPair,
    QuaternarySequence,
    aperiodic_autocorrelation,
    dj_companion,
    generate_dj_golay,
    is_golay_pair,
    phase_orbit,
    to_complex,
)
from qampmepr.envelope import (
    CarrierConfig,
    CodeSpec,
    PepEstimate,
    instantaneous_power,
    mean_power,
    pep,
    pmepr_code,
    power_via_autocorrelation,
    synthesize_signal,
)
from qampmepr.qammap import QamMatrix, compose_qam, constellation_points, decompose_qam
from qampmepr.bounds import (
    BoundReport,
    ThresholdProfile,
    corollary1_bound,
    corollary2_bounds,
    fact1_bound,
    lemma1_pep_bound,
    lemma2_pav,
    theorem1_bound,
)
from qampmepr.setbuilder import (
    FamilyReport,
    ProductCode,
    SequenceFamily,
    build_code,
    build_families,
    close_under_phase,
    empirical_pmepr,
    enumerate_by_pep,
    family_report,
)

__version__ = "0.1.0"
