"""Python bindings for the context-aware decoding engine."""

from ._pycad import (
    DEFAULT_TEMPLATE,
    CadError,
    CopyPriorModel,
    EvalExample,
    GenerationConfig,
    LogitProvider,
    NGramModel,
    RandomSource,
    RemoteProvider,
    argmax,
    cad_combine,
    cad_distribution,
    conflict_fixture,
    exact_match,
    format_dataset,
    generate,
    load_toy_model,
    make_swap,
    normalize_answer,
    open_provider,
    parse_dataset,
    read_dataset,
    rouge_l,
    run_command,
    run_eval,
    sample_at,
    select,
    softmax,
    sweep,
    top_p_nucleus,
)

__all__ = [name for name in dir() if not name.startswith("_")]
