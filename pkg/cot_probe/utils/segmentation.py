"""Character classes and chain segmentation (lines, words, subwords)."""

import logging
import re
import unicodedata
from collections.abc import Iterable
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from pathlib import Path
from typing import Protocol

from cot_probe.utils.errors import CotProbeError

logger = logging.getLogger(__name__)

Span = tuple[int, int]

DEFAULT_SCHEME = "default"
ALPHA_CHUNK = 4
DIGIT_CHUNK = 3

_WORD_RE = re.compile(r"\S+")
_DIGIT_RUN_RE = re.compile(r"[0-9]+")


class UnknownSchemeError(CotProbeError):
    """Запрошенная схема токенизации не зарегистрирована."""

    pass


class VocabularyError(CotProbeError):
    """Ошибка чтения или содержимого словаря."""

    pass


class CharClass(str, Enum):
    ALPHABETIC = "alphabetic"
    DIGIT = "digit"
    WHITESPACE = "whitespace"
    SYMBOL = "symbol"


def classify_char(c: str) -> CharClass:
    """
    Определяет класс символа.

    Цифры - только ASCII 0-9, буквы - любые категории Unicode L*.

    Args:
        c: Один символ

    Returns:
        Класс символа
    """
    if "0" <= c <= "9":
        return CharClass.DIGIT
    if c.isspace():
        return CharClass.WHITESPACE
    if unicodedata.category(c).startswith("L"):
        return CharClass.ALPHABETIC
    return CharClass.SYMBOL


def line_spans(text: str) -> list[Span]:
    spans: list[Span] = []
    start = 0
    for i, c in enumerate(text):
        if c == "\n":
            spans.append((start, i))
            start = i + 1
    spans.append((start, len(text)))
    return spans


def split_lines(text: str) -> list[str]:
    """Newline-free segments in order; empty segments are kept."""
    return text.split("\n")


def word_spans(text: str) -> list[Span]:
    return [m.span() for m in _WORD_RE.finditer(text)]


def split_words(text: str) -> list[str]:
    """Maximal non-whitespace runs; punctuation stays attached."""
    return _WORD_RE.findall(text)


def digit_runs(text: str) -> list[Span]:
    """Spans of maximal ASCII digit runs."""
    return [m.span() for m in _DIGIT_RUN_RE.finditer(text)]


# int() отказывается разбирать строки длиннее 4300 цифр
MAX_INT_DIGITS = 4000


def canonical_number(token: str) -> str:
    """
    Нормализует числовой токен без перевода в int.

    Ведущие нули убираются, знак сохраняется ("-007" -> "-7", "-0" -> "0").
    """
    negative = token.startswith("-")
    digits = token.lstrip("-").lstrip("0") or "0"
    return f"-{digits}" if negative and digits != "0" else digits


def number_sort_key(canonical: str) -> tuple[int, int, str]:
    """Numeric ordering of canonical tokens, usable on any length."""
    digits = canonical.lstrip("-")
    if canonical.startswith("-"):
        return (0, -len(digits), "".join(chr(0x69 - ord(c)) for c in digits))
    return (1, len(digits), digits)


def number_value(canonical: str) -> int | None:
    """int для разумной длины, иначе None."""
    if len(canonical.lstrip("-")) > MAX_INT_DIGITS:
        return None
    return int(canonical)


class TokenizerScheme(Protocol):
    def spans(self, text: str) -> list[Span]: ...


def _class_runs(text: str) -> Iterable[tuple[CharClass, int, int]]:
    """Runs of equal class, whitespace excluded."""
    start = 0
    while start < len(text):
        cls = classify_char(text[start])
        end = start + 1
        while end < len(text) and classify_char(text[end]) == cls:
            end += 1
        if cls != CharClass.WHITESPACE:
            yield cls, start, end
        start = end


class ClassBoundaryScheme:
    """Default scheme: split on class boundaries, then chunk runs.

    Alphabetic runs are cut into pieces of at most 4 characters, digit runs
    into pieces of at most 3, symbols are single-character tokens.
    """

    def spans(self, text: str) -> list[Span]:
        result: list[Span] = []
        for cls, start, end in _class_runs(text):
            if cls == CharClass.ALPHABETIC:
                size = ALPHA_CHUNK
            elif cls == CharClass.DIGIT:
                size = DIGIT_CHUNK
            else:
                size = 1
            result.extend((i, min(i + size, end)) for i in range(start, end, size))
        return result


class VocabularyScheme:
    """Greedy longest-match over a token list, single-character fallback."""

    def __init__(self, tokens: Iterable[str]) -> None:
        self.vocab = frozenset(t for t in tokens if t and not any(c.isspace() for c in t))
        if not self.vocab:
            raise VocabularyError("Словарь пуст")
        self.max_len = max(len(t) for t in self.vocab)

    def spans(self, text: str) -> list[Span]:
        result: list[Span] = []
        for start, end in word_spans(text):
            i = start
            while i < end:
                for length in range(min(self.max_len, end - i), 0, -1):
                    if length == 1 or text[i : i + length] in self.vocab:
                        result.append((i, i + length))
                        i += length
                        break
        return result


def read_vocabulary(path: Path) -> list[str]:
    """
    Читает словарь: UTF-8, один токен на строку.

    Args:
        path: Путь к файлу словаря

    Returns:
        Токены в порядке файла (без пустых строк)

    Raises:
        VocabularyError: Файл не читается или пуст
    """
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except (OSError, UnicodeDecodeError) as e:
        raise VocabularyError(f"Не удалось прочитать словарь {path}: {e}")
    tokens = [line.strip() for line in lines if line.strip()]
    if not tokens:
        raise VocabularyError(f"Словарь {path} пуст")
    return tokens


_SCHEMES: dict[str, TokenizerScheme] = {DEFAULT_SCHEME: ClassBoundaryScheme()}


def register_scheme(scheme_id: str, scheme: TokenizerScheme) -> None:
    if scheme_id == DEFAULT_SCHEME:
        raise ValueError("default scheme cannot be replaced")
    _SCHEMES[scheme_id] = scheme
    logger.info(f"Registered tokenizer scheme: {scheme_id}")


def register_vocabulary_scheme(scheme_id: str, path: Path) -> None:
    register_scheme(scheme_id, VocabularyScheme(read_vocabulary(path)))


def get_scheme(scheme_id: str) -> TokenizerScheme:
    try:
        return _SCHEMES[scheme_id]
    except KeyError:
        raise UnknownSchemeError(f"Unknown tokenizer scheme: {scheme_id!r}")


def subword_spans(text: str, scheme: str = DEFAULT_SCHEME) -> list[Span]:
    return get_scheme(scheme).spans(text)


def tokenize_subwords(text: str, scheme: str = DEFAULT_SCHEME) -> list[str]:
    """Subword tokens; the text between consecutive spans is whitespace only."""
    return [text[s:e] for s, e in subword_spans(text, scheme)]


@dataclass(frozen=True)
class SegmentedChain:
    """Lazily computed views of one chain at every granularity."""

    raw: str
    scheme: str = field(default=DEFAULT_SCHEME)

    @cached_property
    def lines(self) -> list[Span]:
        return line_spans(self.raw)

    @cached_property
    def words(self) -> list[Span]:
        return word_spans(self.raw)

    @cached_property
    def subwords(self) -> list[Span]:
        return subword_spans(self.raw, self.scheme)

    @cached_property
    def class_map(self) -> tuple[CharClass, ...]:
        return tuple(classify_char(c) for c in self.raw)

    def text_of(self, spans: list[Span]) -> list[str]:
        return [self.raw[s:e] for s, e in spans]

    def class_counts(self) -> dict[CharClass, int]:
        counts = dict.fromkeys(CharClass, 0)
        for cls in self.class_map:
            counts[cls] += 1
        return counts


def segment(text: str, scheme: str = DEFAULT_SCHEME) -> SegmentedChain:
    # Проверяем схему сразу, а не при первом обращении к subwords
    get_scheme(scheme)
    return SegmentedChain(raw=text, scheme=scheme)
