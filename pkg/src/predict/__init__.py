from src.predict.ridge import LinearModel, fit_overhead, fit_ridge, mape, predict
from src.predict.selection import select_lambda
from src.predict.stage_models import (
    StageModels,
    StageModelSet,
    TraceRow,
    chain_predict,
    estimate_batch,
    fit_stage_models,
    format_model_file,
    mape_report,
    parse_model_file,
)
