"""User-report synthesizer.

Reports mimic crowd-sourced issue descriptions: a symptom-class sentence
bank with synonym swaps and a low typo rate, plus structured multiple
choice flags. The symptom class is determined by the fault category.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .faults import (
    COMPONENT_FAILURE,
    INCORRECT_DATA_EXCHANGE,
    NETWORK_CONGESTION,
    NETWORK_MISCONFIGURATION,
    RESOURCE_UNDERPROVISIONING,
    SOURCE_CODE_BUG,
    SUBSYSTEM_MISCONFIGURATION,
    FaultSpec,
)

CHOICE_FLAGS = ("slow_load", "missing_content", "error_page", "crash")


@dataclass(frozen=True)
class UserReport:
    text: str
    choices: dict[str, bool] = field(default_factory=dict)

    def flags(self) -> tuple[str, ...]:
        return tuple(name for name in CHOICE_FLAGS if self.choices.get(name))


SLOW_BANK = (
    "Page took forever to load, sat at a gray screen for almost a minute.",
    "The site is loading slowly, every click takes ages to respond.",
    "Everything feels really slow today, pages crawl in bit by bit.",
    "Page is loading slowly and images never seem to finish.",
    "It took over a minute for the page to show anything at all.",
    "Super laggy experience, the spinner just keeps going and going.",
    "Checkout is painfully slow, I almost gave up waiting.",
    "The page eventually loads but it is way slower than usual.",
    "Clicking around is sluggish, each page takes a very long time.",
    "Loading is so slow I thought my connection had died.",
)

MISSING_BANK = (
    "There is nothing on the page, it is empty, nothing to click on.",
    "The page loads but the main content is just missing.",
    "I clicked to expand and the page went away, no content at all.",
    "Half of the page is blank, the product list never shows up.",
    "Page comes up empty, none of the usual items are there.",
    "The content area is completely blank no matter what I try.",
    "Nothing renders except the header, the rest of the page is empty.",
    "Listings are gone, the page shows an empty shell.",
    "I get a mostly blank screen where the results should be.",
    "The page skeleton appears but no actual data ever fills in.",
)

ERROR_BANK = (
    "An error page showed up saying something went wrong.",
    "I keep getting an error message instead of the page I asked for.",
    "'Funny 500 Page Message' appeared and the page is blank otherwise.",
    "The site throws an error every time I try to open my cart.",
    "Got a server error banner at the top and the request failed.",
    "It says request failed with an error and tells me to retry.",
    "There is an error notice where my order summary should be.",
    "Every other click lands on an error page, very annoying.",
    "The page shows an internal error message and nothing else.",
    "An error popup keeps appearing when I submit the form.",
)

CRASH_BANK = (
    "The page crashed with a broken-site cartoon and nothing works.",
    "The app crashed right after I opened the item details.",
    "It showed the wrong items and then the page crashed completely.",
    "The page displays garbage content and then freezes up.",
    "Content looks wrong, like it loaded someone else's page, then it died.",
    "The tab crashes whenever I open the comments section.",
    "'you broke it' cartoon showed up and the page stopped responding.",
    "Weird duplicated content everywhere and then a crash screen.",
    "The page renders the wrong thing and clicking anything kills it.",
    "It flashed some mixed-up content before crashing out.",
)

SYMPTOM_BANKS = {
    "slow": SLOW_BANK,
    "missing": MISSING_BANK,
    "error": ERROR_BANK,
    "crash": CRASH_BANK,
}

SYMPTOM_FOR_CATEGORY = {
    RESOURCE_UNDERPROVISIONING: "slow",
    NETWORK_CONGESTION: "slow",
    COMPONENT_FAILURE: "missing",
    NETWORK_MISCONFIGURATION: "missing",
    SUBSYSTEM_MISCONFIGURATION: "error",
    INCORRECT_DATA_EXCHANGE: "error",
    SOURCE_CODE_BUG: "crash",
}

CHOICES_FOR_CATEGORY = {
    RESOURCE_UNDERPROVISIONING: ("slow_load",),
    NETWORK_CONGESTION: ("slow_load",),
    COMPONENT_FAILURE: ("missing_content",),
    NETWORK_MISCONFIGURATION: ("missing_content",),
    SUBSYSTEM_MISCONFIGURATION: ("error_page",),
    INCORRECT_DATA_EXCHANGE: ("error_page", "missing_content"),
    SOURCE_CODE_BUG: ("crash",),
}

_SYNONYMS = {
    "page": ("page", "site", "screen"),
    "slow": ("slow", "sluggish", "laggy"),
    "slowly": ("slowly", "sluggishly"),
    "empty": ("empty", "blank", "bare"),
    "error": ("error", "failure"),
    "crashed": ("crashed", "died", "broke"),
    "loading": ("loading", "rendering"),
    "content": ("content", "stuff", "data"),
    "forever": ("forever", "ages", "an eternity"),
    "wrong": ("wrong", "incorrect", "weird"),
}

_TYPO_RATE = 0.004


def _swap_synonyms(text: str, rng: np.random.Generator) -> str:
    words = text.split(" ")
    out = []
    for word in words:
        bare = word.strip(".,!'\"").lower()
        if bare in _SYNONYMS and rng.random() < 0.35:
            choice = _SYNONYMS[bare][int(rng.integers(0, len(_SYNONYMS[bare])))]
            word = word.replace(bare, choice) if bare in word else word
        out.append(word)
    return " ".join(out)


def _add_typos(text: str, rng: np.random.Generator) -> str:
    chars = list(text)
    i = 0
    while i < len(chars) - 1:
        if chars[i].isalpha() and rng.random() < _TYPO_RATE:
            if rng.random() < 0.5:
                del chars[i]  # dropped letter
            else:
                chars[i], chars[i + 1] = chars[i + 1], chars[i]  # transposition
        i += 1
    return "".join(chars)


def synthesize_report(fault: FaultSpec, seed: int) -> UserReport:
    """Deterministic report for (fault, seed)."""

    rng = np.random.default_rng(seed)
    symptom = SYMPTOM_FOR_CATEGORY[fault.category]
    bank = SYMPTOM_BANKS[symptom]
    text = bank[int(rng.integers(0, len(bank)))]
    if rng.random() < 0.4:  # second sentence from the same bank
        extra = bank[int(rng.integers(0, len(bank)))]
        if extra != text:
            text = f"{text} {extra}"
    text = _swap_synonyms(text, rng)
    text = _add_typos(text, rng)
    choices = {flag: False for flag in CHOICE_FLAGS}
    for flag in CHOICES_FOR_CATEGORY[fault.category]:
        choices[flag] = True
    return UserReport(text=text, choices=choices)
