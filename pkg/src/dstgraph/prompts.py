"""Prompt construction for ontology-free dialogue state tracking.

Six strategies render to a single prompt string: chain-of-thought, three
persona-augmented variants of it, a reasoning-structure framing, and a
breadth-exploration framing.  All pieces are pinned string constants so
rendered prompts are reproducible byte for byte, and none of them name
any domain, slot, or value vocabulary (the ontology-free guarantee).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path


class PromptStrategy(Enum):
    COT = "cot"
    COT_PERSONA1 = "cot-persona1"
    COT_PERSONA2 = "cot-persona2"
    COT_PERSONA3 = "cot-persona3"
    SELF_DISCOVER = "self-discover"
    TOT = "tot"


_PERSONAS = {
    PromptStrategy.COT_PERSONA1: (
        "You are an advanced dialogue state tracker with expertise in "
        "understanding and managing complex conversations to maintain context "
        "and provide accurate responses."
    ),
    PromptStrategy.COT_PERSONA2: (
        "You are a context-aware dialogue specialist, skilled in recognizing "
        "user intents and maintaining seamless conversation flow by accurately "
        "tracking dialogue states."
    ),
    PromptStrategy.COT_PERSONA3: (
        "You are an expert conversational analyst, proficient in monitoring "
        "and updating dialogue states to ensure coherent and contextually "
        "appropriate interactions."
    ),
}

COT_FRAME = (
    "Below is an instruction that describes a task, paired with an input that "
    "provides further context. Write a response that appropriately completes "
    "the request. Ensure that the response is clear, concise, and directly "
    "addresses the task described in the instruction. Avoid asking for "
    "personal information or making assumptions beyond the provided context."
)

STEP_SENTENCE = "Let's step by step."

ANTI_HALLUCINATION = "If the value does not exist, return the value as NONE."

# single-prompt framings; these strategies are prompt variants here, not
# multi-call search procedures
SELF_DISCOVER_PREAMBLE = (
    "First select the reasoning steps this task needs, compose them into a "
    "plan, then follow the plan on the given input."
)

TOT_PREAMBLE = (
    "Consider several distinct readings of the conversation, briefly weigh "
    "each, and answer with the most consistent one."
)

_COT_FAMILY = {
    PromptStrategy.COT,
    PromptStrategy.COT_PERSONA1,
    PromptStrategy.COT_PERSONA2,
    PromptStrategy.COT_PERSONA3,
}

# exemplar counts the toolkit's benchmark configurations use; others work
# but are flagged so configurations stay comparable
_STANDARD_EXEMPLAR_COUNTS = {0, 2, 3, 4}

DEFAULT_INSTRUCTION = (
    "Track the dialogue state of the conversation below. Identify each topic "
    "the user talks about, the attribute they constrain, and the stated "
    "choice, and report them as three aligned lists in exactly this format: "
    "Domain : [`first topic'] , Slot : [`first attribute'] , Value : [`first "
    "choice'], with one entry per tracked pair and nothing else in the "
    "response."
)


@dataclass(frozen=True)
class PromptSpec:
    """Everything needed to render one prompt."""

    strategy: PromptStrategy
    instruction: str
    input_text: str
    anti_hallucination: bool = False
    exemplars: tuple[tuple[str, str], ...] = field(default_factory=tuple)

    @property
    def nonstandard_exemplar_count(self) -> bool:
        return len(self.exemplars) not in _STANDARD_EXEMPLAR_COUNTS


def persona_text(kind: PromptStrategy) -> str:
    """The verbatim persona sentence for persona variants 1-3."""
    if kind not in _PERSONAS:
        raise ValueError(f"{kind.value} is not a persona variant")
    return _PERSONAS[kind]


def default_instruction() -> str:
    """The pinned default instruction; names the output format, no vocabulary."""
    return DEFAULT_INSTRUCTION


def build_prompt(spec: PromptSpec, overrides: dict[str, str] | None = None) -> str:
    """Render a PromptSpec to its single prompt string.

    Piece order: persona (persona variants only), the fixed frame, the
    strategy sentence, the anti-hallucination clause iff the flag is set,
    exemplars, then the live "Instruction: ... Input: ... Response:" tail.
    Pieces join with single spaces.  ``overrides`` may replace any named
    template piece (see load_template_overrides).
    """
    ov = overrides or {}
    instruction = ov.get("instruction", spec.instruction)
    if not instruction.strip():
        raise ValueError("instruction must be non-empty")
    if not spec.input_text.strip():
        raise ValueError("input_text must be non-empty")

    pieces: list[str] = []
    if spec.strategy in _PERSONAS:
        key = f"persona{spec.strategy.value[-1]}"
        pieces.append(ov.get(key, _PERSONAS[spec.strategy]))
    pieces.append(ov.get("frame", COT_FRAME))
    if spec.strategy in _COT_FAMILY:
        pieces.append(ov.get("step", STEP_SENTENCE))
    elif spec.strategy is PromptStrategy.SELF_DISCOVER:
        pieces.append(ov.get("self_discover", SELF_DISCOVER_PREAMBLE))
    elif spec.strategy is PromptStrategy.TOT:
        pieces.append(ov.get("tot", TOT_PREAMBLE))
    if spec.anti_hallucination:
        pieces.append(ov.get("anti_hallucination", ANTI_HALLUCINATION))
    for ex_input, ex_output in spec.exemplars:
        pieces.append(
            f"Instruction: {instruction} Input: {ex_input} Response: {ex_output}"
        )
    pieces.append(
        f"Instruction: {instruction} Input: {spec.input_text} Response:"
    )
    return " ".join(pieces)


_OVERRIDE_SECTIONS = {
    "instruction",
    "frame",
    "step",
    "anti_hallucination",
    "persona1",
    "persona2",
    "persona3",
    "self_discover",
    "tot",
}


def load_template_overrides(path: str | Path) -> dict[str, str]:
    """Read template overrides from a sectioned UTF-8 text file.

    Sections open with a ``[name]`` line; the body runs to the next header.
    Bodies are stripped and kept verbatim otherwise.  Unknown section names
    are an error so typos do not silently no-op.
    """
    overrides: dict[str, str] = {}
    current: str | None = None
    body: list[str] = []

    def flush():
        if current is not None:
            overrides[current] = "\n".join(body).strip()

    for line in Path(path).read_text(encoding="utf-8").splitlines():
        stripped = line.strip()
        if stripped.startswith("[") and stripped.endswith("]"):
            name = stripped[1:-1].strip()
            if name not in _OVERRIDE_SECTIONS:
                raise ValueError(f"unknown template section: [{name}]")
            flush()
            current = name
            body = []
        elif current is not None:
            body.append(line)
        elif stripped:
            raise ValueError("template file must start with a [section] header")
    flush()
    return overrides


def load_exemplars(path: str | Path) -> tuple[tuple[str, str], ...]:
    """Read few-shot exemplars from a JSONL file of {input, output} records."""
    import json

    pairs: list[tuple[str, str]] = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        rec = json.loads(line)
        pairs.append((str(rec["input"]), str(rec["output"])))
    return tuple(pairs)
