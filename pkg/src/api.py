import uvicorn
from fastapi import Depends, FastAPI, HTTPException

from core import API_PORT, DEFAULT_MEMORY_WORDS
from auth import validate_api_key
from equiv import pass_matrix, sweep
from errors import CcdfgError, SynthesisError
from logger import logger
from models import CheckRequest, CheckResponse, DesignRequest, PipelineRequest, PipelineResponse, ValidateResponse
from synth import pipeline
from textio import CcdfgDocument, parse_ccdfg, serialize_ccdfg
from validators import validate_pipelinable

# Create the FastAPI application
app = FastAPI(title="CCDFG pipeline validation")


def _sequential(text: str):
    try:
        document = parse_ccdfg(text)
    except CcdfgError as e:
        logger.warning(f"Rejected design: {e.kind}: {e}")
        raise HTTPException(status_code=400, detail=e.to_dict())
    if document.pipelined:
        raise HTTPException(status_code=400, detail={"kind": "SemanticError", "message": "expected a sequential design"})
    return document.design


def _pipeline(design, interval: int):
    try:
        return pipeline(design, interval)
    except SynthesisError as e:
        logger.warning(f"Pipeline not generated: {e.kind}: {e}")
        raise HTTPException(status_code=422, detail=e.to_dict())


@app.get("/")
@app.head("/")
def root():
    logger.info("Root endpoint accessed")
    return {"message": "API running correctly"}


@app.post("/validate", response_model=ValidateResponse)
def validate_endpoint(request: DesignRequest, valid: bool = Depends(validate_api_key)):
    logger.info("Validating design")
    design = _sequential(request.design)
    diagnostics = validate_pipelinable(design)
    logger.debug(f"Found {len(diagnostics)} violations")
    return ValidateResponse(pipelinable=not diagnostics, diagnostics=[d.model_dump() for d in diagnostics])


@app.post("/pipeline", response_model=PipelineResponse)
def pipeline_endpoint(request: PipelineRequest, valid: bool = Depends(validate_api_key)):
    logger.info(f"Pipelining design with interval {request.interval}")
    result = _pipeline(_sequential(request.design), request.interval)
    params = result.params
    document = CcdfgDocument(design=result.pipelined, meta={
        "interval": str(params.interval), "m": str(params.m), "depth": str(params.depth),
    })
    return PipelineResponse(interval=params.interval, m=params.m, depth=params.depth,
                            document=serialize_ccdfg(document))


@app.post("/check", response_model=CheckResponse)
def check_endpoint(request: CheckRequest, valid: bool = Depends(validate_api_key)):
    logger.info(f"Checking {request.mode} for k=1..{request.k_max}, {request.samples} samples")
    result = _pipeline(_sequential(request.design), request.interval)
    try:
        reports = sweep(result, request.mode, request.k_max, request.samples, request.seed, DEFAULT_MEMORY_WORDS)
    except CcdfgError as e:
        logger.error(f"Check aborted: {e.kind}: {e}", exc_info=True)
        raise HTTPException(status_code=422, detail=e.to_dict())
    failures = [r for r in reports if not r.passed]
    matrix = pass_matrix(reports)
    return CheckResponse(
        passed=not failures,
        total=len(reports),
        failures=len(failures),
        matrix={str(k): {"passed": int(row["passed"]), "total": int(row["total"])} for k, row in matrix.iterrows()},
        first_failure=failures[0].model_dump() if failures else None,
    )


def serve(port: int = API_PORT):
    logger.info("Starting API server")
    uvicorn.run(app, host="0.0.0.0", port=port)


if __name__ == "__main__":
    serve()
