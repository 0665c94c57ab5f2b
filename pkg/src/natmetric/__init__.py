"""Asymptotic densities, distribution functions and natural metrics on the positive integers."""
from .density import (DEFAULT_TOL, NATURALS, DYADIC_BLOCKS, Complement, DensityReport, Explicit,
                      Indicator, Intersection, Preimage, Progression, SetSpec, Union, WindowSchedule,
                      density_report, mask_report, partial_mean)
from .distribution import (correlation, dispersion, empirical_df, adf_estimate, continuity_diagnostic,
                           independence_statistic, joint_adf, mean, strauch_statistic)
from .expr import parse_hierarchy, parse_sequence, parse_set, parse_spec_expr
from .partitions import (NaturalMetric, adapted_hierarchy, ball_trace, dump_hierarchy,
                         first_divergence_level, load_hierarchy, metric_eval, naturality_check,
                         polyadic_hierarchy, product_hierarchy, uniform_continuity_check)
from .completion import (CylinderMeasure, cylinder_measure, df_tilde, extend_sequence, measure_density,
                         nu_measurable_check, sample_point)
from .lln import sampled_ud_experiment, v_set_density
from .reduction import exact_sum, window_means
from .sequences import (PHI, SQRT2, SQRT3, Affine, Constant, FracMultiples, Interval, PiecewiseMonotoneFn,
                        PointwiseSum, PolyFrac, Reciprocal, SequenceSpec, Transform, VanDerCorput)
from .weyl import integral_test, moment_test, ud_mod1_verdict

__version__ = "0.1.0"
