from .test_bsde import solve_test_bsde, linearity_check, martingale_increments
from .transform import TransformedGenerator, exp_transform, auto_transform_alpha
from .picard import PicardReport, solve_picard, a_priori_constant, data_size, driver_of
from .closed_form import (solve_linear_closed_form, closed_form_representation, hedge_portfolio,
                          hedge_from_representation)
from .yosida import (YosidaParams, YosidaGenerator, YosidaResult, yosida_resolvent, yosida_generator,
                     yosida_sequence)
