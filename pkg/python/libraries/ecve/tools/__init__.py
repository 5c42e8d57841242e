from . import benchmark
from . import fit_reduction
from . import gradient_check
from . import reduce_predictors
from . import simulation_study
