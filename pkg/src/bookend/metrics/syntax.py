"""Syntax similarity via a labeled tree kernel over shared subtree fragments.

A fragment is a connected subgraph with at least one full production: every
included node brings either all of its children or none. The kernel counts
identical fragment pairs between two trees and is normalized by the
self-kernels. Exact syntax-kernel plugins (and real parsers) can replace the
shipped fallback through the `SyntaxParser` protocol.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Protocol, runtime_checkable

from ..corpus import Sentence


@dataclass(frozen=True)
class LabeledTree:
    label: str
    children: tuple["LabeledTree", ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "children", tuple(self.children))

    @property
    def is_leaf(self) -> bool:
        return not self.children


class ParseError(Exception):
    """The syntax backend could not produce a tree for a sentence."""


@runtime_checkable
class SyntaxParser(Protocol):
    def parse(self, sentence: Sentence) -> LabeledTree: ...


def _internal_nodes(tree: LabeledTree) -> list[LabeledTree]:
    nodes = []
    stack = [tree]
    while stack:
        node = stack.pop()
        if not node.is_leaf:
            nodes.append(node)
            stack.extend(node.children)
    return nodes


def _matching_fragments(n1: LabeledTree, n2: LabeledTree, memo: dict) -> int:
    key = (id(n1), id(n2))
    if key in memo:
        return memo[key]
    if n1.label != n2.label or len(n1.children) != len(n2.children) or n1.is_leaf:
        memo[key] = 0
        return 0
    if any(c1.label != c2.label for c1, c2 in zip(n1.children, n2.children)):
        memo[key] = 0
        return 0
    product = 1
    for c1, c2 in zip(n1.children, n2.children):
        product *= 1 + _matching_fragments(c1, c2, memo)
    memo[key] = product
    return product


def fragment_kernel(t1: LabeledTree, t2: LabeledTree) -> int:
    """Number of identical (fragment, fragment) pairs across the two trees."""
    memo: dict = {}
    return sum(
        _matching_fragments(n1, n2, memo) for n1 in _internal_nodes(t1) for n2 in _internal_nodes(t2)
    )


def tree_similarity(t1: LabeledTree, t2: LabeledTree) -> float:
    """Normalized kernel K12 / sqrt(K11 * K22); 0.0 for fragment-free trees."""
    k11 = fragment_kernel(t1, t1)
    k22 = fragment_kernel(t2, t2)
    if k11 == 0 or k22 == 0:
        return 0.0
    return fragment_kernel(t1, t2) / math.sqrt(k11 * k22)


def syntax_similarity(a: Sentence, b: Sentence, parser: SyntaxParser) -> float:
    return tree_similarity(parser.parse(a), parser.parse(b))


class TokenShapeParser:
    """Fallback 'parser': a flat tree over coarse token-shape classes.

    Not a grammar. It gives the kernel deterministic labeled trees so syntax
    similarity degrades to token-shape-sequence overlap when no real parser
    is plugged in.
    """

    name = "token-shape-parser"

    def parse(self, sentence: Sentence) -> LabeledTree:
        children = []
        for token in sentence.tokens:
            children.append(LabeledTree(self._classify(token), (LabeledTree(token),)))
        return LabeledTree("S", tuple(children))

    @staticmethod
    def _classify(token: str) -> str:
        if token[0].isdigit():
            return "num"
        return f"w{min(len(token), 7)}"
