from .base import Model, ModelError, PriorOnlyModel
from .conjugate import (
    ConjugateGaussianModel,
    conjugate_loglik,
    conjugate_posterior,
    make_conjugate_problem,
)
from .deconvolution import (
    BDConfig,
    BDDataset,
    BlindDeconvolutionModel,
    blind_deconvolution_loglik,
    convolve,
    simulate_bd_dataset,
)
from .gp_classification import (
    GpClassificationModel,
    gp_classification_loglik,
    make_gp_classification,
)
from .solute import (
    SoluteDataset,
    SoluteHyper,
    SoluteTransportModel,
    generate_solute_datasets,
    pack,
    param_index,
    solute_loglik,
    solute_prior,
    solute_solve,
    unpack,
)
