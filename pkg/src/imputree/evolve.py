"""Evolutionary search over typed pipeline trees.

Generation, variation, cross-validated evaluation, and the (mu + lambda)
loop with Pareto survivor selection. Every stochastic choice flows from a
single seed through named hash-derived streams, so a run is reproducible
regardless of where or when it executes.
"""

import hashlib
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .data import DataMatrix, kfold_indices
from .grammar import (
    CLASSIFIER,
    DEFAULT_MAX_PIPELINE_LEN,
    IMPUTER,
    TRANSFORM,
    PipelineNode,
    build_estimator,
    chain_nodes,
    default_grammar,
    serialize_tree,
    tree_size,
)
from .nsga2 import binary_tournament, nsga2_select, rank_and_crowding
from .validation import check_array, check_is_fitted, check_n_features, check_X_y


def derive_seed(*parts):
    """Stable 63-bit seed from the joined string form of the parts."""
    text = "/".join(str(p) for p in parts)
    digest = hashlib.blake2b(text.encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big") & (2**63 - 1)


@dataclass(frozen=True)
class EvolutionConfig:
    pop_size: int = 20
    generations: int = 10
    max_pipeline_len: int = DEFAULT_MAX_PIPELINE_LEN
    cv_folds: int = 3
    crossover_prob: float = 0.1
    mutation_prob: float = 0.9
    seed: int = 0

    def __post_init__(self):
        if self.pop_size < 2:
            raise ValueError("pop_size must be at least 2")
        if self.generations < 0:
            raise ValueError("generations must be non-negative")
        if self.max_pipeline_len < 2:
            raise ValueError("max_pipeline_len must be at least 2")
        if self.cv_folds < 2:
            raise ValueError("cv_folds must be at least 2")
        if min(self.crossover_prob, self.mutation_prob) < 0:
            raise ValueError("variation probabilities must be non-negative")
        if self.crossover_prob + self.mutation_prob > 1:
            raise ValueError("crossover_prob + mutation_prob must not exceed 1")


@dataclass
class Individual:
    tree: PipelineNode
    size: int
    accuracy: float = 0.0
    valid: bool = False
    evaluated: bool = False

    @property
    def fitness(self):
        return (self.accuracy, self.size)


# --- tree generation and variation ------------------------------------------


def _random_params(spec, rng):
    return tuple(dom[rng.integers(len(dom))] for dom in spec.domains)


def _rebuild(nodes):
    """Chain a root-first node list back into a tree, relinking children."""
    sub = None
    for node in reversed(nodes):
        sub = PipelineNode(node.spec, sub, node.params)
    return sub


def random_tree(grammar, data_complete, max_len, rng):
    """Uniform random valid tree.

    The classifier is drawn uniformly, the transform-chain length is
    uniform on {0 .. max_len - 2}, each transform and every terminal is
    uniform over its choices, and missing data appends a uniform imputer
    adjacent to the input.
    """
    nodes = []
    clf = grammar.classifiers[rng.integers(len(grammar.classifiers))]
    nodes.append(PipelineNode(clf, None, _random_params(clf, rng)))
    n_transforms = int(rng.integers(max_len - 1)) if grammar.transforms else 0
    for _ in range(n_transforms):
        t = grammar.transforms[rng.integers(len(grammar.transforms))]
        nodes.append(PipelineNode(t, None, _random_params(t, rng)))
    if not data_complete:
        imp = grammar.imputers[rng.integers(len(grammar.imputers))]
        nodes.append(PipelineNode(imp, None, _random_params(imp, rng)))
    return _rebuild(nodes)


def crossover(a, b, max_len, rng):
    """Swap same-role subtrees between two trees.

    A position in the first tree is drawn uniformly among those with at
    least one partner of the same role in the second tree such that both
    offspring stay within max_len; the partner is then drawn uniformly.
    Returns the parents unchanged when no such pair exists.
    """
    ca, cb = chain_nodes(a), chain_nodes(b)
    partners = {}
    for i, na in enumerate(ca):
        options = [
            j
            for j, nb in enumerate(cb)
            if nb.spec.role == na.spec.role
            and i + (len(cb) - j) <= max_len
            and j + (len(ca) - i) <= max_len
        ]
        if options:
            partners[i] = options
    if not partners:
        return a, b
    positions = sorted(partners)
    i = positions[rng.integers(len(positions))]
    j = partners[i][rng.integers(len(partners[i]))]
    child1 = _graft(ca[:i], cb[j])
    child2 = _graft(cb[:j], ca[i])
    return child1, child2


def _graft(upper, subtree):
    """Attach an existing (immutable) subtree below a root-first prefix."""
    sub = subtree
    for node in reversed(upper):
        sub = PipelineNode(node.spec, sub, node.params)
    return sub


def mutate(tree, grammar, data_complete, max_len, rng):
    """One mutation: terminal resample (0.6), operator swap (0.2), or
    transform insert/remove (0.2).

    Each kind falls back to the next applicable one when the tree offers
    no site for it, so mutation always returns a valid tree.
    """
    r = rng.random()
    if r < 0.6:
        kind = "terminal"
    elif r < 0.8:
        kind = "operator"
    else:
        kind = "length"

    if kind == "length":
        result = _mutate_length(tree, grammar, max_len, rng)
        if result is not None:
            return result
        kind = "terminal"
    if kind == "terminal":
        result = _mutate_terminal(tree, rng)
        if result is not None:
            return result
        kind = "operator"
    return _mutate_operator(tree, grammar, rng)


def _mutate_terminal(tree, rng):
    nodes = chain_nodes(tree)
    sites = [
        (ni, pi)
        for ni, node in enumerate(nodes)
        for pi, dom in enumerate(node.spec.domains)
        if len(dom) >= 2
    ]
    if not sites:
        return None
    ni, pi = sites[rng.integers(len(sites))]
    node = nodes[ni]
    current = node.params[pi]
    choices = [
        v
        for v in node.spec.domains[pi]
        if not (type(v) is type(current) and v == current)
    ]
    value = choices[rng.integers(len(choices))]
    params = node.params[:pi] + (value,) + node.params[pi + 1 :]
    nodes[ni] = PipelineNode(node.spec, None, params)
    return _rebuild(nodes)


def _mutate_operator(tree, grammar, rng):
    nodes = chain_nodes(tree)
    buckets = {
        IMPUTER: grammar.imputers,
        TRANSFORM: grammar.transforms,
        CLASSIFIER: grammar.classifiers,
    }
    sites = [
        ni
        for ni, node in enumerate(nodes)
        if len(buckets[node.spec.role]) >= 2
    ]
    if not sites:
        return tree
    ni = sites[rng.integers(len(sites))]
    alternatives = [s for s in buckets[nodes[ni].spec.role] if s is not nodes[ni].spec]
    spec = alternatives[rng.integers(len(alternatives))]
    nodes[ni] = PipelineNode(spec, None, _random_params(spec, rng))
    return _rebuild(nodes)


def _mutate_length(tree, grammar, max_len, rng):
    nodes = chain_nodes(tree)
    has_imputer = nodes[-1].spec.role == IMPUTER
    n_transforms = len(nodes) - 1 - (1 if has_imputer else 0)
    remove = rng.random() < 0.5
    if remove and n_transforms == 0:
        remove = False
    if not remove and (len(nodes) >= max_len or not grammar.transforms):
        if n_transforms == 0:
            return None
        remove = True
    if remove:
        idx = 1 + int(rng.integers(n_transforms))
        del nodes[idx]
    else:
        t = grammar.transforms[rng.integers(len(grammar.transforms))]
        slot = 1 + int(rng.integers(n_transforms + 1))
        nodes.insert(slot, PipelineNode(t, None, _random_params(t, rng)))
    return _rebuild(nodes)


# --- pipeline fitting and evaluation ----------------------------------------


class FittedPipeline:
    """A pipeline tree fitted on one training matrix."""

    def __init__(self, tree, steps):
        self.tree = tree
        self.steps = steps

    def predict(self, X):
        for est in self.steps[:-1]:
            X = est.transform(X)
        return self.steps[-1].predict(X)


def fit_pipeline(tree, X, y, seed):
    """Fit the chain innermost-first on (X, y) and return the fitted steps.

    Each stochastic estimator receives its own seed derived from the
    given one and the node position. The returned object transforms and
    predicts new rows without touching the training data again.
    """
    nodes = list(reversed(chain_nodes(tree)))
    steps = []
    for pos, node in enumerate(nodes):
        est = build_estimator(node, random_state=derive_seed(seed, "op", pos))
        if node.spec.role == CLASSIFIER:
            est.fit(X, y)
        else:
            X = est.fit_transform(X, y)
        steps.append(est)
    return FittedPipeline(tree, steps)


def evaluate_tree(tree, data, folds, eval_seed):
    """Cross-validated accuracy of a tree; (accuracy, valid).

    Each fold fits a fresh pipeline on the training rows only and scores
    the held-out rows, so no statistic of a validation row ever reaches a
    fit. Any estimator failure marks the tree invalid with accuracy 0.
    """
    accs = []
    for k, (train_idx, val_idx) in enumerate(folds):
        try:
            fitted = fit_pipeline(
                tree,
                data.values[train_idx],
                data.labels[train_idx],
                derive_seed(eval_seed, "fold", k),
            )
            preds = fitted.predict(data.values[val_idx])
        except Exception:
            return 0.0, False
        accs.append(float(np.mean(preds == data.labels[val_idx])))
    return float(np.mean(accs)), True


# --- archive and main loop --------------------------------------------------


class HallOfFame:
    """Archive of valid individuals no member of which dominates another."""

    def __init__(self):
        self.members = []

    def update(self, ind):
        from .nsga2 import dominates

        if not ind.valid:
            return
        fit = ind.fitness
        key = serialize_tree(ind.tree)
        for m in self.members:
            if dominates(m.fitness, fit):
                return
        self.members = [
            m
            for m in self.members
            if not dominates(fit, m.fitness) and serialize_tree(m.tree) != key
        ]
        self.members.append(ind)

    def best(self):
        """Highest accuracy, then smallest size, then earliest entry."""
        if not self.members:
            return None
        return max(self.members, key=lambda m: (m.accuracy, -m.size))

    def best_accuracy(self):
        return self.best().accuracy if self.members else 0.0


@dataclass
class EvolveResult:
    hof: list
    history: list = field(default_factory=list)
    n_evaluations: int = 0
    final_population: Optional[list] = None


def _make_individual(tree):
    return Individual(tree=tree, size=tree_size(tree))


def evolve(data, grammar, cfg, progress=None):
    """Run the full (mu + lambda) loop on one training matrix.

    Offspring are produced by crossover with probability crossover_prob,
    mutation with mutation_prob, and plain reproduction otherwise, with
    parents drawn by binary tournament on (front rank, crowding).
    Survivors come from Pareto selection over parents plus offspring.
    history holds the archive's best accuracy after initialization and
    after each generation; progress, when given, is called with
    (generation, best_accuracy, archive_size) at the same points.
    """
    rng = np.random.default_rng(derive_seed(cfg.seed, "variation"))
    folds = kfold_indices(data.labels, cfg.cv_folds, derive_seed(cfg.seed, "folds"))
    hof = HallOfFame()
    n_evals = 0

    pop = []
    for i in range(cfg.pop_size):
        ind = _make_individual(
            random_tree(grammar, data.complete, cfg.max_pipeline_len, rng)
        )
        ind.accuracy, ind.valid = evaluate_tree(
            ind.tree, data, folds, derive_seed(cfg.seed, "eval", 0, i)
        )
        ind.evaluated = True
        n_evals += 1
        hof.update(ind)
        pop.append(ind)
    history = [hof.best_accuracy()]
    if progress is not None:
        progress(0, history[-1], len(hof.members))

    for gen in range(1, cfg.generations + 1):
        fitnesses = [ind.fitness for ind in pop]
        ranks, crowd = rank_and_crowding(fitnesses)

        def parent():
            return pop[binary_tournament(ranks, crowd, fitnesses, rng)]

        offspring = []
        while len(offspring) < cfg.pop_size:
            r = rng.random()
            if r < cfg.crossover_prob:
                p1, p2 = parent(), parent()
                c1, c2 = crossover(p1.tree, p2.tree, cfg.max_pipeline_len, rng)
                offspring.append(_make_individual(c1))
                if len(offspring) < cfg.pop_size:
                    offspring.append(_make_individual(c2))
            elif r < cfg.crossover_prob + cfg.mutation_prob:
                child = mutate(
                    parent().tree, grammar, data.complete, cfg.max_pipeline_len, rng
                )
                offspring.append(_make_individual(child))
            else:
                offspring.append(replace(parent()))

        for idx, ind in enumerate(offspring):
            if ind.evaluated:
                continue
            ind.accuracy, ind.valid = evaluate_tree(
                ind.tree, data, folds, derive_seed(cfg.seed, "eval", gen, idx)
            )
            ind.evaluated = True
            n_evals += 1
            hof.update(ind)

        combined = pop + offspring
        survivors = nsga2_select([ind.fitness for ind in combined], cfg.pop_size)
        pop = [combined[i] for i in survivors]
        history.append(hof.best_accuracy())
        if progress is not None:
            progress(gen, history[-1], len(hof.members))

    ordered = sorted(
        hof.members, key=lambda m: (-m.accuracy, m.size, serialize_tree(m.tree))
    )
    return EvolveResult(
        hof=ordered,
        history=history,
        n_evaluations=n_evals,
        final_population=pop,
    )


class ImputreeClassifier(BaseEstimator, ClassifierMixin):
    """Classifier that evolves its own pipeline before fitting it.

    fit runs the evolutionary loop on the training table, with imputers in
    the search space only when X actually has missing cells, then refits
    the most accurate archive pipeline on all of X. predict pushes new
    rows through that fitted chain. The chosen tree is exposed as
    ``best_tree_`` and its serialized form as ``best_pipeline_``.
    """

    def __init__(
        self,
        pop_size=20,
        generations=10,
        max_pipeline_len=DEFAULT_MAX_PIPELINE_LEN,
        cv_folds=3,
        crossover_prob=0.1,
        mutation_prob=0.9,
        seed=0,
    ):
        self.pop_size = pop_size
        self.generations = generations
        self.max_pipeline_len = max_pipeline_len
        self.cv_folds = cv_folds
        self.crossover_prob = crossover_prob
        self.mutation_prob = mutation_prob
        self.seed = seed

    def fit(self, X, y):
        X, y = check_X_y(X, y, allow_nan=True)
        self.classes_, codes = np.unique(y, return_inverse=True)
        if len(self.classes_) < 2:
            raise ValueError("need at least 2 classes to fit")
        data = DataMatrix(
            X,
            codes,
            [f"x{j}" for j in range(X.shape[1])],
            [str(c) for c in self.classes_],
        )
        grammar = default_grammar(include_imputers=not data.complete)
        cfg = EvolutionConfig(
            pop_size=self.pop_size,
            generations=self.generations,
            max_pipeline_len=self.max_pipeline_len,
            cv_folds=self.cv_folds,
            crossover_prob=self.crossover_prob,
            mutation_prob=self.mutation_prob,
            seed=self.seed,
        )
        result = evolve(data, grammar, cfg)
        if not result.hof:
            raise ValueError("no pipeline evaluated successfully")
        best = result.hof[0]
        self.best_tree_ = best.tree
        self.best_pipeline_ = serialize_tree(best.tree)
        self.cv_accuracy_ = best.accuracy
        self.history_ = result.history
        self.n_features_in_ = X.shape[1]
        self.pipeline_ = fit_pipeline(
            best.tree, np.array(data.values), data.labels, derive_seed(self.seed, "refit")
        )
        return self

    def predict(self, X):
        check_is_fitted(self, "pipeline_")
        has_imputer = any(
            node.spec.role == IMPUTER for node in chain_nodes(self.best_tree_)
        )
        X = check_array(X, allow_nan=has_imputer)
        check_n_features(self, X, self.n_features_in_)
        return self.classes_[self.pipeline_.predict(X)]
