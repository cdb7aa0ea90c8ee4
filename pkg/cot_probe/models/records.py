"""Benchmark records."""

from enum import Enum

from pydantic import BaseModel, ConfigDict, Field


class Benchmark(str, Enum):
    MATH_INTEGER = "math_integer"
    CODE = "code"
    MULTIPLE_CHOICE = "multiple_choice"


class ReasoningRecord(BaseModel):
    """One collected chain for one benchmark question."""

    model_config = ConfigDict(frozen=True, extra="ignore")

    id: str = Field(..., min_length=1, description="Stable record key")
    benchmark: Benchmark
    question: str
    chain: str
    gold_answer: str
    generator: str = Field(default="unknown", description="Model that produced the chain")
    sample_index: int = Field(default=0, ge=0)


class QuestionItem(BaseModel):
    """A benchmark question before chain collection."""

    model_config = ConfigDict(frozen=True, extra="ignore")

    id: str = Field(..., min_length=1)
    benchmark: Benchmark
    question: str
    gold_answer: str
