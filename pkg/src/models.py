from typing import List, Literal, Optional

from pydantic import BaseModel, Field, model_validator

from core import DEFAULT_K_MAX, DEFAULT_MEMORY_WORDS, DEFAULT_SAMPLES, DEFAULT_SEED

Command = Literal["validate", "run", "pipeline", "check-equiv", "check-invariant", "serve"]
OutputFormat = Literal["text", "machine-readable"]

# Flags each command cannot run without
REQUIRED_FLAGS = {
    "pipeline": ("interval",),
    "check-equiv": ("interval",),
    "check-invariant": ("interval",),
}


class CliConfig(BaseModel):
    command: Command
    input_path: Optional[str] = None
    state_path: Optional[str] = None
    zero_init: bool = False
    interval: Optional[int] = Field(default=None, gt=0)
    iterations: int = Field(default=1, ge=0)
    k_max: int = Field(default=DEFAULT_K_MAX, gt=0)
    seed: int = DEFAULT_SEED
    samples: int = Field(default=DEFAULT_SAMPLES, gt=0)
    memory_words: int = Field(default=DEFAULT_MEMORY_WORDS, gt=0)
    trace: bool = False
    output: Optional[str] = None
    format: OutputFormat = "text"
    pipelined_input: Optional[str] = None
    archive: Optional[str] = None

    @model_validator(mode="after")
    def _required_flags(self) -> "CliConfig":
        if self.command != "serve" and not self.input_path:
            raise ValueError(f"{self.command} needs an input design")
        for flag in REQUIRED_FLAGS.get(self.command, ()):
            if getattr(self, flag) is None:
                raise ValueError(f"{self.command} needs --{flag}")
        if self.command == "run" and not (self.state_path or self.zero_init):
            raise ValueError("run needs --state or --zero-init")
        return self


# HTTP payloads

class DesignRequest(BaseModel):
    design: str


class PipelineRequest(DesignRequest):
    interval: int = Field(gt=0)


class CheckRequest(PipelineRequest):
    mode: Literal["correctness", "invariant"] = "correctness"
    k_max: int = Field(default=DEFAULT_K_MAX, gt=0, le=64)
    samples: int = Field(default=DEFAULT_SAMPLES, gt=0, le=1000)
    seed: int = DEFAULT_SEED


class ValidateResponse(BaseModel):
    pipelinable: bool
    diagnostics: List[dict] = Field(default_factory=list)


class PipelineResponse(BaseModel):
    interval: int
    m: int
    depth: int
    document: str


class CheckResponse(BaseModel):
    passed: bool
    total: int
    failures: int
    matrix: dict
    first_failure: Optional[dict] = None
