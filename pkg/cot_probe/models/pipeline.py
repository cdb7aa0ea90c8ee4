"""Processor specs and transform pipelines."""

from enum import Enum

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from cot_probe.utils.segmentation import CharClass, classify_char

DEFAULT_MASK_CHAR = "■"
DEFAULT_FALSE_ANSWER = "123"
NOISE_TEMPLATE = "Thus answer: {answer}."
# Словарь из слов всего датасета, регистрируется при запуске
CORPUS_VOCAB = "corpus"


class ProcessorKind(str, Enum):
    SHUFFLE = "shuffle"
    MASK = "mask"
    REMOVE = "remove"
    RANDOMIZE = "randomize"
    INJECT_NOISE = "inject_noise"


class Target(str, Enum):
    TOKEN = "token"
    WORD = "word"
    LINE = "line"
    INLINE_WORD = "inline_word"
    ALPHABET = "alphabet"
    DIGITS = "digits"
    ANSWER = "answer"


class VocabScope(str, Enum):
    CHAIN = "chain"
    CORPUS = "corpus"


# DSL name -> (kind, target). remove_question / remove_chain are prompt flags, see TransformPipeline.
PROCESSOR_NAMES: dict[str, tuple[ProcessorKind, Target]] = {
    "token_shuffle": (ProcessorKind.SHUFFLE, Target.TOKEN),
    "word_shuffle": (ProcessorKind.SHUFFLE, Target.WORD),
    "line_shuffle": (ProcessorKind.SHUFFLE, Target.LINE),
    "inline_word_shuffle": (ProcessorKind.SHUFFLE, Target.INLINE_WORD),
    "mask_alphabet": (ProcessorKind.MASK, Target.ALPHABET),
    "mask_digits": (ProcessorKind.MASK, Target.DIGITS),
    "mask_answer": (ProcessorKind.MASK, Target.ANSWER),
    "remove_alphabet": (ProcessorKind.REMOVE, Target.ALPHABET),
    "remove_answer": (ProcessorKind.REMOVE, Target.ANSWER),
    "random_token": (ProcessorKind.RANDOMIZE, Target.TOKEN),
    "random_word": (ProcessorKind.RANDOMIZE, Target.WORD),
    "inject_noise": (ProcessorKind.INJECT_NOISE, Target.ANSWER),
}
_NAME_OF = {v: k for k, v in PROCESSOR_NAMES.items()}

REMOVE_QUESTION = "remove_question"
REMOVE_CHAIN = "remove_chain"


class ProcessorSpec(BaseModel):
    """One chain-level transformation with its parameters."""

    model_config = ConfigDict(frozen=True)

    kind: ProcessorKind
    target: Target
    k: int = Field(default=0, ge=0, description="Noise multiplier")
    false_answer: str = DEFAULT_FALSE_ANSWER
    sentence: str | None = Field(default=None, description="Explicit noise sentence")
    mask_char: str = DEFAULT_MASK_CHAR
    vocab_id: str | None = None
    scope: VocabScope = VocabScope.CHAIN
    scheme: str = "default"
    seed_salt: int = Field(default=0, ge=0, lt=1 << 64)

    @field_validator("mask_char")
    @classmethod
    def _single_symbol(cls, value: str) -> str:
        # Маска не может быть буквой или цифрой
        if len(value) != 1 or classify_char(value) != CharClass.SYMBOL:
            raise ValueError("mask_char must be a single non-alphanumeric, non-space character")
        return value

    @model_validator(mode="after")
    def _known_combination(self) -> "ProcessorSpec":
        if (self.kind, self.target) not in _NAME_OF:
            raise ValueError(f"unsupported processor: {self.kind.value}/{self.target.value}")
        if self.scope == VocabScope.CORPUS and self.vocab_id not in (None, CORPUS_VOCAB):
            raise ValueError("scope=corpus samples the corpus vocabulary and takes no vocab")
        return self

    @classmethod
    def named(cls, name: str, **params: object) -> "ProcessorSpec":
        kind, target = PROCESSOR_NAMES[name]
        return cls(kind=kind, target=target, **params)

    @property
    def name(self) -> str:
        return _NAME_OF[(self.kind, self.target)]

    @property
    def vocabulary_id(self) -> str | None:
        """Sampling vocabulary; None means the chain's own units."""
        if self.scope == VocabScope.CORPUS:
            return CORPUS_VOCAB
        return self.vocab_id

    @property
    def noise_sentence(self) -> str:
        if self.sentence is not None:
            return self.sentence
        return NOISE_TEMPLATE.format(answer=self.false_answer)

    @property
    def needs_answer(self) -> bool:
        return self.target == Target.ANSWER

    def to_dsl(self) -> str:
        params: list[str] = []
        if self.kind == ProcessorKind.INJECT_NOISE:
            params.append(f"k={self.k}")
            if self.false_answer != DEFAULT_FALSE_ANSWER:
                params.append(f"false_answer={self.false_answer}")
            if self.sentence is not None:
                escaped = self.sentence.replace("\\", "\\\\").replace('"', '\\"')
                params.append(f'sentence="{escaped}"')
        if self.kind == ProcessorKind.MASK and self.mask_char != DEFAULT_MASK_CHAR:
            params.append(f"char={self.mask_char}")
        if self.vocab_id is not None:
            params.append(f"vocab={self.vocab_id}")
        if self.scope != VocabScope.CHAIN:
            params.append(f"scope={self.scope.value}")
        if self.scheme != "default":
            params.append(f"scheme={self.scheme}")
        if self.seed_salt:
            params.append(f"salt={self.seed_salt}")
        return f"{self.name}({','.join(params)})" if params else self.name


class TransformPipeline(BaseModel):
    """Ordered steps; the first listed step is applied first."""

    model_config = ConfigDict(frozen=True)

    steps: tuple[ProcessorSpec, ...] = ()
    run_seed: int = Field(default=0, ge=0, lt=1 << 64)
    include_question: bool = True
    include_chain: bool = True

    @property
    def is_identity(self) -> bool:
        return not self.steps and self.include_question and self.include_chain

    @property
    def noise_multiplier(self) -> int:
        return sum(s.k for s in self.steps if s.kind == ProcessorKind.INJECT_NOISE)

    def to_dsl(self) -> str:
        names: list[str] = []
        if not self.include_question:
            names.append(REMOVE_QUESTION)
        if not self.include_chain:
            names.append(REMOVE_CHAIN)
        names.extend(step.to_dsl() for step in self.steps)
        return ",".join(names)
