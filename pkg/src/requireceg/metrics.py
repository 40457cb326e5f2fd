"""Measurement suite: readability indices, diversity entropy, project reports.

Readability conventions (documented because the indices do not pin them):

* Sentences: text is processed line by line; within a line, runs of `.`, `!`
  or `?` followed by whitespace or end of line terminate a sentence; a line
  with no terminal punctuation is one sentence.
* Words: whitespace tokens with surrounding punctuation stripped.
* Syllables: count maximal vowel groups (a e i o u y) in the letters of the
  word; subtract one for a silent final "e" (not "le" after a consonant)
  when more than one group remains; minimum one for any word with letters.
* Complex words (fog index): at least three syllables after stripping a
  trailing "es"/"ed", excluding proper nouns (capitalized words that do not
  open their sentence).
* The word-points index is computed over the first 100 words; a sentence
  partially inside the window counts as consumed. Negative grades clamp to 0.
"""

from __future__ import annotations

import logging
import math
import re
import statistics
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .errors import EmptyCorpus, EmptyInput, EmptyText
from .gherkin.ast import GherkinDocument, KeywordStats, keyword_stats, serialize
from .gherkin.lint import SyntaxAccuracy, acc_syn
from .oracle import Oracle, OracleRequest, parse_structured_answer
from .review import ReviewReport

logger = logging.getLogger(__name__)

FURPS_CATEGORIES = (
    "Functionality",
    "Usability",
    "Reliability",
    "Performance",
    "Supportability",
)

_SENTENCE_END_RE = re.compile(r"[.!?]+(?=\s|$)")
_VOWEL_GROUP_RE = re.compile(r"[aeiouy]+")


@dataclass(frozen=True)
class ReadabilityScores:
    gunning_fog: float
    linsear_write: float
    word_count: int
    sentence_count: int
    complex_word_count: int

    def to_dict(self) -> dict:
        return {
            "gunning_fog": self.gunning_fog,
            "linsear_write": self.linsear_write,
            "word_count": self.word_count,
            "sentence_count": self.sentence_count,
            "complex_word_count": self.complex_word_count,
        }


@dataclass(frozen=True)
class DiversityProfile:
    category_counts: dict[str, int]
    entropy: float

    def to_dict(self) -> dict:
        return {"category_counts": dict(self.category_counts), "entropy": self.entropy}


def count_syllables(word: str) -> int:
    letters = re.sub(r"[^a-z]", "", word.lower())
    if not letters:
        return 0
    groups = len(_VOWEL_GROUP_RE.findall(letters))
    if (
        letters.endswith("e")
        and groups > 1
        and not (len(letters) >= 3 and letters.endswith("le") and letters[-3] not in "aeiouy")
    ):
        groups -= 1
    return max(groups, 1)


def _sentences(text: str) -> list[list[str]]:
    """Sentences as word lists, applying the line-based segmentation rules."""
    sentences: list[list[str]] = []
    for line in text.replace("\r\n", "\n").split("\n"):
        if not line.strip():
            continue
        pieces = _SENTENCE_END_RE.split(line)
        for piece in pieces:
            words = [w.strip("\"'“”‘’(),.;:!?|[]<>") for w in piece.split()]
            words = [w for w in words if w]
            if words:
                sentences.append(words)
    return sentences


def _is_complex(word: str, first_in_sentence: bool) -> bool:
    if word[:1].isupper() and not first_in_sentence:
        return False  # proper-noun exclusion
    base = word
    lowered = base.lower()
    if lowered.endswith(("es", "ed")):
        base = base[:-2]
    return count_syllables(base) >= 3


def readability(text: str) -> ReadabilityScores:
    """Compute the fog and word-points grade levels for one text."""
    sentences = _sentences(text)
    words = [w for sentence in sentences for w in sentence]
    if not words:
        raise EmptyText("readability requires text with at least one word")
    sentence_count = len(sentences)
    word_count = len(words)
    complex_count = 0
    for sentence in sentences:
        for position, word in enumerate(sentence):
            if _is_complex(word, position == 0):
                complex_count += 1
    gunning_fog = 0.4 * (word_count / sentence_count + 100.0 * complex_count / word_count)

    window_words = 0
    window_sentences = 0
    points = 0.0
    for sentence in sentences:
        if window_words >= 100:
            break
        window_sentences += 1
        for word in sentence:
            if window_words >= 100:
                break
            window_words += 1
            points += 3.0 if count_syllables(word) >= 3 else 1.0
    ratio = points / window_sentences
    linsear = ratio / 2.0 if ratio > 20.0 else (ratio - 2.0) / 2.0
    linsear = max(linsear, 0.0)

    return ReadabilityScores(
        gunning_fog=gunning_fog,
        linsear_write=linsear,
        word_count=word_count,
        sentence_count=sentence_count,
        complex_word_count=complex_count,
    )


def diversity(categorized_features: Sequence[tuple[str, str]]) -> DiversityProfile:
    """Shannon entropy of the category distribution, with 0·log0 = 0."""
    if not categorized_features:
        raise EmptyInput("diversity requires at least one categorized feature")
    counts = {category: 0 for category in FURPS_CATEGORIES}
    for name, category in categorized_features:
        if category not in counts:
            raise ValueError(f"'{category}' is not one of {FURPS_CATEGORIES}")
        counts[category] += 1
    total = sum(counts.values())
    entropy = 0.0
    for count in counts.values():
        if count:
            p = count / total
            entropy -= p * math.log2(p)
    return DiversityProfile(category_counts=counts, entropy=entropy)


def classify_furps(feature_titles: Sequence[str],
                   oracle: Oracle) -> list[tuple[str, str]]:
    """Map each feature title to one category via the classification agent.

    An invalid category triggers one reprompt; a second failure defaults to
    Functionality with a logged flag.
    """
    pairs: list[tuple[str, str]] = []
    for title in feature_titles:
        payload = {"title": title, "categories": list(FURPS_CATEGORIES)}
        category = _ask_category(oracle, payload)
        if category is None:
            retry = dict(payload, errors=[f"category must be one of {FURPS_CATEGORIES}"])
            category = _ask_category(oracle, retry)
        if category is None:
            logger.warning("no valid category for %r after reprompt; defaulting to "
                           "Functionality", title)
            category = "Functionality"
        pairs.append((title, category))
    return pairs


def _ask_category(oracle: Oracle, payload: dict) -> Optional[str]:
    data = parse_structured_answer(
        oracle.complete(OracleRequest(agent="ClassifyFURPS", payload=payload))
    )
    category = str(data.get("category", "")).strip()
    return category if category in FURPS_CATEGORIES else None


@dataclass
class ProjectReport:
    keyword_stats: KeywordStats
    acc_syn: SyntaxAccuracy
    readability: ReadabilityScores
    readability_spread: dict[str, float]
    diversity: DiversityProfile
    review_summary: dict[str, int]
    per_feature_readability: list[ReadabilityScores] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "keyword_stats": self.keyword_stats.to_dict(),
            "acc_syn": self.acc_syn.to_dict(),
            "readability": self.readability.to_dict(),
            "readability_spread": dict(self.readability_spread),
            "diversity": self.diversity.to_dict(),
            "review_summary": dict(self.review_summary),
            "per_feature_readability": [r.to_dict() for r in self.per_feature_readability],
        }


def _mean_std(values: Sequence[float]) -> tuple[float, float]:
    if not values:
        return 0.0, 0.0
    if len(values) == 1:
        return values[0], 0.0
    return statistics.fmean(values), statistics.pstdev(values)


def project_report(features: Sequence[GherkinDocument], sources: Sequence[str],
                   review: Optional[ReviewReport], oracle: Oracle) -> ProjectReport:
    """Aggregate every metric for one project's feature set."""
    if not features:
        raise EmptyCorpus("project_report requires at least one feature")
    if len(features) != len(sources):
        raise ValueError("features and sources must be parallel lists")
    stats = keyword_stats(list(features), list(sources))
    accuracy = acc_syn(list(sources))
    per_feature = [readability(serialize(doc)) for doc in features]
    fog_mean, fog_std = _mean_std([r.gunning_fog for r in per_feature])
    lw_mean, lw_std = _mean_std([r.linsear_write for r in per_feature])
    mean_scores = ReadabilityScores(
        gunning_fog=fog_mean,
        linsear_write=lw_mean,
        word_count=sum(r.word_count for r in per_feature),
        sentence_count=sum(r.sentence_count for r in per_feature),
        complex_word_count=sum(r.complex_word_count for r in per_feature),
    )
    profile = diversity(classify_furps([doc.feature_title for doc in features], oracle))
    summary = review.summary() if review is not None else {"kept": 0, "modified": 0, "added": 0}
    return ProjectReport(
        keyword_stats=stats,
        acc_syn=accuracy,
        readability=mean_scores,
        readability_spread={"gunning_fog": fog_std, "linsear_write": lw_std},
        diversity=profile,
        review_summary=summary,
        per_feature_readability=per_feature,
    )
