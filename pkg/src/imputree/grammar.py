"""Typed pipeline grammar: primitives, tree nodes, validation, text form.

A pipeline is a chain-shaped tree. The root is a classifier node, below it
sit zero or more transform nodes, and the innermost node is either an
imputer or the bare input-matrix marker. Node types are enforced on every
edge: imputers map RawMatrix to CompleteMatrix, transforms map
CompleteMatrix to CompleteMatrix, classifiers map CompleteMatrix to a
Classification. On data that may contain missing cells, the input matrix
is Raw, which forces exactly one imputer adjacent to it; on complete data
the input is already Complete, which forbids imputers entirely.
"""

import inspect
from dataclasses import dataclass
from typing import Optional

from .classifiers import (
    DecisionTreeClassifier,
    GaussianNB,
    GradientBoostingClassifier,
    KNNClassifier,
    LogisticRegression,
    MultinomialNB,
    RandomForestClassifier,
)
from .imputers import (
    EMImputer,
    MaxImputer,
    MeanImputer,
    MedianImputer,
    MFImputer,
    MICEImputer,
)
from .transforms import (
    PCA,
    MaxAbsScaler,
    MinMaxScaler,
    SelectKBest,
    StandardScaler,
    VarianceThreshold,
)

RAW = "RawMatrix"
COMPLETE = "CompleteMatrix"
CLASSIFICATION = "Classification"

IMPUTER = "imputer"
TRANSFORM = "transform"
CLASSIFIER = "classifier"

_ROLE_TYPES = {
    IMPUTER: (RAW, COMPLETE),
    TRANSFORM: (COMPLETE, COMPLETE),
    CLASSIFIER: (COMPLETE, CLASSIFICATION),
}

DEFAULT_MAX_PIPELINE_LEN = 4


@dataclass(eq=False)
class PrimitiveSpec:
    """One grammar entry; compared by identity, shared by all trees."""

    name: str
    role: str
    estimator_cls: type
    param_names: tuple
    domains: tuple

    def __post_init__(self):
        if self.role not in _ROLE_TYPES:
            raise ValueError(f"unknown role {self.role!r}")
        if len(self.param_names) != len(self.domains):
            raise ValueError(f"{self.name}: one domain per hyperparameter required")
        for name, dom in zip(self.param_names, self.domains):
            if len(dom) == 0:
                raise ValueError(f"{self.name}.{name}: empty domain")
        params = inspect.signature(self.estimator_cls.__init__).parameters
        self.accepts_random_state = "random_state" in params

    @property
    def input_type(self):
        return _ROLE_TYPES[self.role][0]

    @property
    def output_type(self):
        return _ROLE_TYPES[self.role][1]

    def __repr__(self):
        return f"PrimitiveSpec({self.name})"


@dataclass(frozen=True)
class PipelineNode:
    """Operator node; child None marks the input-matrix terminal below."""

    spec: PrimitiveSpec
    child: Optional["PipelineNode"]
    params: tuple

    def __post_init__(self):
        if len(self.params) != len(self.spec.param_names):
            raise ValueError(
                f"{self.spec.name} takes {len(self.spec.param_names)} "
                f"hyperparameters, got {len(self.params)}"
            )


def chain_nodes(tree):
    """Nodes from the root down to the innermost operator."""
    nodes = []
    node = tree
    while node is not None:
        nodes.append(node)
        node = node.child
    return nodes


def tree_size(tree):
    """Operator-node count; the minimized fitness objective."""
    return len(chain_nodes(tree))


class Grammar:
    """Validated primitive collection with name lookup and role buckets."""

    def __init__(self, primitives):
        self.primitives = list(primitives)
        self.by_name = {}
        for spec in self.primitives:
            if spec.name in self.by_name:
                raise ValueError(f"duplicate primitive name {spec.name!r}")
            self.by_name[spec.name] = spec
        self.imputers = [p for p in self.primitives if p.role == IMPUTER]
        self.transforms = [p for p in self.primitives if p.role == TRANSFORM]
        self.classifiers = [p for p in self.primitives if p.role == CLASSIFIER]
        if not self.classifiers:
            raise ValueError("grammar needs at least one classifier")

    def spec(self, name):
        if name not in self.by_name:
            raise ValueError(f"unknown primitive {name!r}")
        return self.by_name[name]


def default_grammar(include_imputers=True):
    """The stock primitive set.

    include_imputers=False builds the complete-data grammar whose trees sit
    directly on the input matrix.
    """
    primitives = []
    if include_imputers:
        chained_domains = (tuple(range(1, 21)), tuple(range(1, 11)))
        primitives += [
            PrimitiveSpec("MeanImputer", IMPUTER, MeanImputer, (), ()),
            PrimitiveSpec("MedianImputer", IMPUTER, MedianImputer, (), ()),
            PrimitiveSpec("MFImputer", IMPUTER, MFImputer, (), ()),
            PrimitiveSpec("MaxImputer", IMPUTER, MaxImputer, (), ()),
            PrimitiveSpec(
                "MICEImputer", IMPUTER, MICEImputer,
                ("max_iter", "m"), chained_domains,
            ),
            PrimitiveSpec(
                "EMImputer", IMPUTER, EMImputer,
                ("max_iter", "m"), chained_domains,
            ),
        ]
    primitives += [
        PrimitiveSpec(
            "MaxAbsScaler", TRANSFORM, MaxAbsScaler, ("copy",), ((True, False),)
        ),
        PrimitiveSpec("MinMaxScaler", TRANSFORM, MinMaxScaler, (), ()),
        PrimitiveSpec("StandardScaler", TRANSFORM, StandardScaler, (), ()),
        PrimitiveSpec(
            "PCA", TRANSFORM, PCA, ("n_components",), (tuple(range(1, 11)),)
        ),
        PrimitiveSpec(
            "VarianceThreshold", TRANSFORM, VarianceThreshold,
            ("threshold",), ((0.0, 0.01, 0.05, 0.1, 0.2),),
        ),
        PrimitiveSpec(
            "SelectKBest", TRANSFORM, SelectKBest, ("k",), (tuple(range(1, 21)),)
        ),
        PrimitiveSpec(
            "KNN", CLASSIFIER, KNNClassifier,
            ("n_neighbors", "p", "weights"),
            (tuple(range(1, 101)), (1, 2), ("uniform", "distance")),
        ),
        PrimitiveSpec("GaussianNB", CLASSIFIER, GaussianNB, (), ()),
        PrimitiveSpec(
            "MultinomialNB", CLASSIFIER, MultinomialNB,
            ("alpha", "fit_prior"),
            ((0.001, 0.01, 0.1, 1, 10, 100), (True, False)),
        ),
        PrimitiveSpec(
            "DecisionTree", CLASSIFIER, DecisionTreeClassifier,
            ("criterion", "max_depth", "min_samples_split"),
            (("gini", "entropy"), tuple(range(1, 11)), tuple(range(2, 21))),
        ),
        PrimitiveSpec(
            "RandomForest", CLASSIFIER, RandomForestClassifier,
            ("n_estimators",), ((10, 50, 100),),
        ),
        PrimitiveSpec(
            "LogisticRegression", CLASSIFIER, LogisticRegression,
            ("C",), ((0.01, 0.1, 1, 10, 100),),
        ),
        PrimitiveSpec(
            "GradientBoosting", CLASSIFIER, GradientBoostingClassifier,
            ("n_estimators", "learning_rate", "max_depth"),
            ((10, 50, 100), (0.01, 0.1, 0.5), tuple(range(1, 6))),
        ),
    ]
    return Grammar(primitives)


def _value_in_domain(value, domain):
    # bool is an int subclass, so membership must be type-strict
    return any(type(value) is type(d) and value == d for d in domain)


def validate_tree(tree, data_complete, max_len=DEFAULT_MAX_PIPELINE_LEN):
    """All invariant violations of a pipeline tree, empty when valid.

    The edge rules are purely type-driven: the input matrix is Complete or
    Raw depending on data_complete, every adjacent pair must agree on the
    connecting type, and the root must produce a Classification. This
    single discipline yields the structural rules (one classifier at the
    root, imputer exactly at the input on missing data, never elsewhere).
    """
    problems = []
    nodes = chain_nodes(tree)
    if nodes[0].spec.output_type != CLASSIFICATION:
        problems.append(f"root {nodes[0].spec.name} does not classify")
    for above, below in zip(nodes, nodes[1:]):
        if above.spec.input_type != below.spec.output_type:
            problems.append(
                f"{above.spec.name} expects {above.spec.input_type} but "
                f"{below.spec.name} yields {below.spec.output_type}"
            )
    input_type = COMPLETE if data_complete else RAW
    innermost = nodes[-1]
    if innermost.spec.input_type != input_type:
        problems.append(
            f"{innermost.spec.name} expects {innermost.spec.input_type} but "
            f"the input matrix is {input_type}"
        )
    if len(nodes) > max_len:
        problems.append(f"{len(nodes)} operators exceed the limit of {max_len}")
    for node in nodes:
        for pname, value, domain in zip(
            node.spec.param_names, node.params, node.spec.domains
        ):
            if not _value_in_domain(value, domain):
                problems.append(
                    f"{node.spec.name}.{pname} value {value!r} outside its domain"
                )
    return problems


def build_estimator(node, random_state=None):
    """Instantiate the node's estimator with its hyperparameters.

    Estimators that accept a random_state get the provided one, so every
    stochastic fit is reproducible from the caller's seed schedule.
    """
    kwargs = dict(zip(node.spec.param_names, node.params))
    if node.spec.accepts_random_state and random_state is not None:
        kwargs["random_state"] = int(random_state)
    return node.spec.estimator_cls(**kwargs)


# --- text form --------------------------------------------------------------

INPUT_MARKER = "input_matrix"


def _format_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, str):
        return f"'{v}'"
    return repr(v)


def serialize_tree(tree):
    """Bracketed list form, e.g. [KNN, [MFImputer, input_matrix], 5, 2, 'uniform']."""
    child = INPUT_MARKER if tree.child is None else serialize_tree(tree.child)
    parts = [tree.spec.name, child] + [_format_value(v) for v in tree.params]
    return "[" + ", ".join(parts) + "]"


def _tokenize(text):
    tokens = []
    i = 0
    while i < len(text):
        c = text[i]
        if c in "[],":
            tokens.append(c)
            i += 1
        elif c.isspace():
            i += 1
        elif c == "'":
            j = text.find("'", i + 1)
            if j < 0:
                raise ValueError("unterminated string in pipeline text")
            tokens.append(text[i : j + 1])
            i = j + 1
        else:
            j = i
            while j < len(text) and text[j] not in "[]," and not text[j].isspace():
                j += 1
            tokens.append(text[i:j])
            i = j
    return tokens


def _parse_atom(token):
    if token == "true":
        return True
    if token == "false":
        return False
    if token.startswith("'") and token.endswith("'"):
        return token[1:-1]
    try:
        return int(token)
    except ValueError:
        pass
    try:
        return float(token)
    except ValueError:
        raise ValueError(f"cannot parse value {token!r}") from None


class _Parser:
    def __init__(self, tokens, grammar):
        self.tokens = tokens
        self.pos = 0
        self.grammar = grammar

    def _next(self):
        if self.pos >= len(self.tokens):
            raise ValueError("unexpected end of pipeline text")
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def _expect(self, want):
        tok = self._next()
        if tok != want:
            raise ValueError(f"expected {want!r}, found {tok!r}")

    def parse_node(self):
        self._expect("[")
        name = self._next()
        spec = self.grammar.spec(name)
        self._expect(",")
        if self.pos < len(self.tokens) and self.tokens[self.pos] == "[":
            child = self.parse_node()
        else:
            marker = self._next()
            if marker != INPUT_MARKER:
                raise ValueError(f"expected a subtree or {INPUT_MARKER}, found {marker!r}")
            child = None
        params = []
        while True:
            tok = self._next()
            if tok == "]":
                break
            if tok != ",":
                raise ValueError(f"expected ',' or ']', found {tok!r}")
            params.append(_parse_atom(self._next()))
        return PipelineNode(spec, child, tuple(params))


def parse_tree(text, grammar):
    """Inverse of serialize_tree over the same grammar; exact round-trip."""
    parser = _Parser(_tokenize(text), grammar)
    tree = parser.parse_node()
    if parser.pos != len(parser.tokens):
        raise ValueError("trailing text after pipeline")
    return tree
