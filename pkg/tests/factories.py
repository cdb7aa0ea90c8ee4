"""Test data builders shared by unit and integration tests."""

import json
import random
from collections.abc import Sequence
from pathlib import Path

from cot_probe.models.records import Benchmark, ReasoningRecord

BASES_QUESTION = (
    "Find the sum of all integer bases b>9 for which 17_b is a divisor of 97_b."
)

# Цепочка для задачи о системах счисления, разметка LaTeX заменена обычным текстом
BASES_CHAIN = "\n".join(
    [
        "We are asked: Find the sum of all integer bases b > 9 for which 17_b divides 97_b.",
        'Interpretation: In base b, the numeral "17" means the integer 1*b + 7 = b + 7. '
        'Similarly, "97" in base b means 9*b + 7 = 9b + 7. So the condition is that (b + 7) '
        "divides (9b + 7). For b > 9 (since digits must be less than base, digits used are "
        '1,7,9,7. So base must be > 9 to allow digit "9").',
        "We need integer bases b > 9 such that (b + 7) | (9b + 7). Find all b > 9 integer solutions.",
        "So we solve (9b + 7) mod (b + 7) = 0.",
        "Compute remainder: 9b + 7 = 9(b + 7) - 9*7 + 7 = 9(b + 7) - 63 + 7 = 9(b + 7) - 56.",
        "Thus remainder when dividing by b + 7 is -56 (or equivalently b+7 - 56 mod). So we want "
        "b+7 divides 56. Since remainder is -56, we need b+7 divides 56. But note that remainder "
        "of division is 9b+7 - 9(b+7) = -56. So 9b+7 = 9(b+7) - 56. If b+7 divides 9(b+7) "
        "obviously, then b+7 will also divide the remainder -56. So condition: b+7 divides 56. "
        "But also b+7 > 0.",
        "Thus b+7 is a positive divisor of 56.",
        "Since b > 9 => b+7 > 16. So positive divisors of 56 greater than 16.",
        "Divisors of 56: 1,2,4,7,8,14,28,56.",
        "Those > 16: 28,56.",
        "Thus b+7 can be 28 or 56.",
        "So b = 21 or 49. Both >9, integer.",
        "Check base digits constraints: need digits 9,7 allowed. Base must be >9, which both satisfy.",
        "Thus the required sum is 21+49 = 70.",
        "Wait check also b+7 could be negative? No base is positive integer >9.",
        "Thus answer 70.",
        "But perhaps also b+7 dividing -56 (which is same). But we also need to ensure that b+7 "
        "indeed divides 9b+7 (i.e., remainder zero). Our condition implies b+7 divides 56. Since "
        "-56 remainder is multiple of divisor; but careful: remainder must be 0, i.e., -56 should "
        "be multiple of b+7. So b+7 is a divisor of 56. Should -56 be exactly divisible: "
        "b+7 | 56. So that's the condition.",
        "Hence solutions as above.",
        "Double-check those bases indeed work:",
        "b=21: 17_21 = 21+7=28; 97_21 = 9*21+7 = 189+7 = 196. 196/28 = 7 -> integer.",
        "b=49: 17_49 = 49+7 = 56; 97_49 = 9*49+7 = 441+7=448. 448/56 =8 -> integer.",
        "Thus sum = 70.",
        "Thus answer is 70.",
        "But could there be any other possibilities? Let's check for b+7 dividing 56 also could "
        "be 1? But b+7 must be > 16 as we said. So only 28,56. Verified.",
        "Thus answer 70.",
        "However, is there any catch that digits must be less than base, but base 21 and 49 "
        "satisfy digits max 9 <= base-1.",
        "Thus answer stands.",
        "Thus solution: 70.",
        "In final answer format: 70.",
        "Will provide reasoning.",
        "Proceed to final.",
    ]
)

_WORDS = (
    "so", "thus", "the", "answer", "is", "we", "check", "base", "divides", "remainder",
    "шаг", "значит", "café", "mod", "sum", "x", "b",
)
_SYMBOLS = ("=", "+", "-", "*", "/", "(", ")", ":", ";", ",", ".", "|", ">", "->", "_")


def _random_token(rng: random.Random) -> str:
    roll = rng.random()
    if roll < 0.45:
        return rng.choice(_WORDS)
    if roll < 0.75:
        return str(rng.randrange(0, 1000))
    if roll < 0.9:
        return rng.choice(_SYMBOLS)
    # Смешанные токены вида "9b+7" или "17_21"
    return f"{rng.randrange(1, 100)}{rng.choice(_SYMBOLS + ('b', ''))}{rng.randrange(0, 100)}"


def random_chain(rng: random.Random, answer: str | None = None) -> str:
    lines = []
    for _ in range(rng.randint(1, 8)):
        tokens = [_random_token(rng) for _ in range(rng.randint(0, 12))]
        if answer is not None and rng.random() < 0.3:
            tokens.insert(rng.randint(0, len(tokens)), answer)
        sep = rng.choice((" ", " ", "  ", "\t"))
        lines.append(sep.join(tokens))
    return "\n".join(lines)


def anchored_records(count: int = 10, benchmark: Benchmark = Benchmark.MATH_INTEGER) -> list[ReasoningRecord]:
    records = []
    for i in range(count):
        gold = str(100 + 37 * i)
        chain = (
            f"Step one: try {i + 2} and {i + 5}.\n"
            f"Then {gold} - {i + 1} = {int(gold) - i - 1}, add {i + 1} back.\n"
            f"Thus the answer is {gold}"
        )
        records.append(
            ReasoningRecord(
                id=f"q{i:02d}#0",
                benchmark=benchmark,
                question=f"Question number {i}?",
                chain=chain,
                gold_answer=gold,
            )
        )
    return records


def write_records(path: Path, records: Sequence[ReasoningRecord]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(
        "".join(json.dumps(r.model_dump(mode="json")) + "\n" for r in records), encoding="utf-8"
    )
    return path
