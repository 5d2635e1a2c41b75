"""Size estimation for opaque document indexes, checked against a synthetic universe."""

from .engine import (EngineServerError, FaultProfile, HitCountEstimate, Query, QueryLog, ResultPage,
                     SimulatedEngine, round_hce)
from .estimators import (CaptureRecaptureInput, EstimateResult, OverlapStatistic, RatioModel,
                         UndefinedEstimateError, chapman, english_correction, error_adjust, jaccard,
                         khabsa_giles_estimate, language_decompose, lincoln_petersen, overlap, ratio_project,
                         scale_by_english_share)
from .fixtures import FixtureEngine, load_hce_fixture
from .probes import (InconsistencyFinding, YearSeries, absurd_probe, citation_toggle_audit,
                     composition_breakdown, decade_aggregate, false_serp_audit, flag_inconsistencies,
                     longitudinal_sum, patent_flag_audit, pearson, sectional_probe)
from .studies import FilterPolicy, parse_studies_csv, study_ratios, summarize_ratios
from .universe import (CountFilter, CoveragePolicy, GroundTruthUniverse, IndexView, UniverseConfig,
                       ValidationError, derive_view, generate_universe, true_count)

__version__ = "0.1.0"
