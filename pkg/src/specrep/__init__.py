"""Spectral graph representations: normalized-Laplacian spectra, heat-trace
signatures and a perceptron embedding self-trained to tell Erdos-Renyi
graphs from stochastic block models."""
__version__ = "0.1.0"

from .graph import (DatasetError, Graph, GraphCollection, load_tu_dataset,  # noqa: E402
                    normalized_laplacian, permute, write_tu_dataset)
from .spectrum import (Spectrum, SpectrumError, full_spectrum, graph_spectrum,  # noqa: E402
                       interpolate_spectrum, partial_spectrum)
from .heat import (gw_lower_bound, heat_kernel, heat_trace,  # noqa: E402
                   heat_trace_signature, pairwise_gw_lower_bound)
from .synthetic import (CorpusConfig, ErParams, SbmParams, generate_er,  # noqa: E402
                        generate_sbm, generate_training_corpus)
from .model import (ClassifierHead, SgrParams, TrainConfig, embed, load_model,  # noqa: E402
                    save_model, train)
from .estimators import SGR, HeatTraceSignature, SpectrumResampler  # noqa: E402
from .evaluation import (EvalConfig, EvalReport, SoftmaxRegression,  # noqa: E402
                         baseline_lambda, evaluate, logistic_train)

__all__ = [
    "ClassifierHead",
    "CorpusConfig",
    "DatasetError",
    "ErParams",
    "EvalConfig",
    "EvalReport",
    "Graph",
    "GraphCollection",
    "HeatTraceSignature",
    "SGR",
    "SbmParams",
    "SgrParams",
    "SoftmaxRegression",
    "Spectrum",
    "SpectrumError",
    "SpectrumResampler",
    "TrainConfig",
    "baseline_lambda",
    "embed",
    "evaluate",
    "full_spectrum",
    "generate_er",
    "generate_sbm",
    "generate_training_corpus",
    "graph_spectrum",
    "gw_lower_bound",
    "heat_kernel",
    "heat_trace",
    "heat_trace_signature",
    "interpolate_spectrum",
    "load_model",
    "load_tu_dataset",
    "logistic_train",
    "normalized_laplacian",
    "pairwise_gw_lower_bound",
    "partial_spectrum",
    "permute",
    "save_model",
    "train",
    "write_tu_dataset",
]
