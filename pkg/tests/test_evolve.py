import numpy as np
import pytest

from imputree.data import DataMatrix, kfold_indices
from imputree.evolve import (
    EvolutionConfig,
    HallOfFame,
    Individual,
    derive_seed,
    evaluate_tree,
    evolve,
    fit_pipeline,
    mutate,
    random_tree,
)
from imputree.grammar import (
    chain_nodes,
    default_grammar,
    parse_tree,
    serialize_tree,
    validate_tree,
)
from imputree.imputers import MeanImputer
from imputree.injection import InjectionConfig, inject_mcar
from imputree.nsga2 import dominates

from conftest import make_blobs_matrix


@pytest.fixture(scope="module")
def grammar():
    return default_grammar()


@pytest.fixture(scope="module")
def holey_blobs():
    data = make_blobs_matrix(n_rows=60, n_cols=3, n_classes=2, seed=3)
    return inject_mcar(data, InjectionConfig(rate=0.1, seed=5))


class TestDeriveSeed:
    def test_deterministic_and_order_sensitive(self):
        assert derive_seed(1, "a", 2) == derive_seed(1, "a", 2)
        assert derive_seed(1, "a", 2) != derive_seed(2, "a", 1)
        assert derive_seed("x") != derive_seed("y")

    def test_in_seed_range(self):
        for parts in [(0,), (1, 2, 3), ("run", 99)]:
            s = derive_seed(*parts)
            assert 0 <= s < 2**63


class TestConfig:
    def test_probability_budget_enforced(self):
        with pytest.raises(ValueError, match="exceed 1"):
            EvolutionConfig(crossover_prob=0.5, mutation_prob=0.6)

    def test_fold_floor(self):
        with pytest.raises(ValueError, match="folds"):
            EvolutionConfig(cv_folds=1)

    def test_defaults(self):
        cfg = EvolutionConfig()
        assert cfg.crossover_prob == 0.1 and cfg.mutation_prob == 0.9
        assert cfg.max_pipeline_len == 4


class TestRandomTree:
    def test_missing_data_trees_carry_one_innermost_imputer(self, grammar):
        rng = np.random.default_rng(0)
        for _ in range(300):
            tree = random_tree(grammar, False, 4, rng)
            nodes = chain_nodes(tree)
            roles = [n.spec.role for n in nodes]
            assert roles[0] == "classifier"
            assert roles[-1] == "imputer"
            assert roles.count("imputer") == 1
            assert validate_tree(tree, data_complete=False) == []

    def test_complete_data_trees_have_no_imputer(self, grammar):
        rng = np.random.default_rng(1)
        for _ in range(300):
            tree = random_tree(grammar, True, 4, rng)
            assert all(n.spec.role != "imputer" for n in chain_nodes(tree))
            assert validate_tree(tree, data_complete=True) == []

    def test_all_lengths_and_classifiers_reachable(self, grammar):
        rng = np.random.default_rng(2)
        sizes = set()
        roots = set()
        for _ in range(500):
            tree = random_tree(grammar, False, 4, rng)
            sizes.add(len(chain_nodes(tree)))
            roots.add(tree.spec.name)
        assert sizes == {2, 3, 4}
        assert len(roots) == 7


class TestMutate:
    def test_results_always_valid(self, grammar):
        rng = np.random.default_rng(4)
        for _ in range(2000):
            tree = random_tree(grammar, False, 4, rng)
            out = mutate(tree, grammar, False, 4, rng)
            assert validate_tree(out, data_complete=False) == []

    def test_terminal_resample_excludes_current(self, grammar):
        tree = parse_tree("[RandomForest, [MeanImputer, input_matrix], 50]", grammar)
        rng = np.random.default_rng(0)
        seen = set()
        for _ in range(200):
            out = mutate(tree, grammar, False, 4, rng)
            nodes = chain_nodes(out)
            # with the imputer untouched and no inserted transform, only a
            # terminal resample of n_estimators can have happened
            if (
                out.spec.name == "RandomForest"
                and len(nodes) == 2
                and nodes[1].spec.name == "MeanImputer"
            ):
                seen.add(out.params[0])
        assert 50 not in seen
        assert seen == {10, 100}

    def test_bare_tree_without_terminals_still_mutates(self, grammar):
        tree = parse_tree("[GaussianNB, [MeanImputer, input_matrix]]", grammar)
        rng = np.random.default_rng(9)
        changed = 0
        for _ in range(100):
            out = mutate(tree, grammar, False, 4, rng)
            assert validate_tree(out, data_complete=False) == []
            if serialize_tree(out) != serialize_tree(tree):
                changed += 1
        assert changed == 100

    def test_remove_on_transformless_tree_inserts(self, grammar):
        tree = parse_tree("[GaussianNB, [MeanImputer, input_matrix]]", grammar)
        rng = np.random.default_rng(11)
        grew = False
        for _ in range(300):
            out = mutate(tree, grammar, False, 4, rng)
            n = len(chain_nodes(out))
            assert n >= 2
            grew = grew or n == 3
        assert grew


class TestEvaluate:
    def test_each_fit_sees_only_training_rows(self, grammar, holey_blobs, monkeypatch):
        seen = []
        original = MeanImputer.fit

        def spy(self, X, y=None):
            seen.append(np.array(X))
            return original(self, X, y)

        monkeypatch.setattr(MeanImputer, "fit", spy)
        folds = kfold_indices(holey_blobs.labels, 3, seed=21)
        tree = parse_tree("[GaussianNB, [MeanImputer, input_matrix]]", grammar)
        acc, valid = evaluate_tree(tree, holey_blobs, folds, eval_seed=1)
        assert valid and 0 <= acc <= 1
        assert len(seen) == 3
        for X, (train_idx, _) in zip(seen, folds):
            assert np.array_equal(X, holey_blobs.values[train_idx], equal_nan=True)

    def test_failing_estimator_marks_invalid(self, grammar):
        rng = np.random.default_rng(6)
        values = rng.normal(0.0, 1.0, size=(40, 3))
        values[5, 1] = np.nan
        data = DataMatrix(
            values, np.arange(40) % 2, ["a", "b", "c"], ["neg", "pos"]
        )
        tree = parse_tree(
            "[MultinomialNB, [MeanImputer, input_matrix], 1, true]", grammar
        )
        folds = kfold_indices(data.labels, 3, seed=0)
        acc, valid = evaluate_tree(tree, data, folds, eval_seed=0)
        assert acc == 0.0 and valid is False

    def test_deterministic_given_seed(self, grammar, holey_blobs):
        folds = kfold_indices(holey_blobs.labels, 3, seed=2)
        tree = parse_tree(
            "[RandomForest, [MICEImputer, input_matrix, 3, 2], 10]", grammar
        )
        a1 = evaluate_tree(tree, holey_blobs, folds, eval_seed=33)
        a2 = evaluate_tree(tree, holey_blobs, folds, eval_seed=33)
        assert a1 == a2

    def test_fitted_pipeline_predicts_new_rows(self, grammar, holey_blobs):
        tree = parse_tree(
            "[KNN, [StandardScaler, [MeanImputer, input_matrix]], 5, 2, 'uniform']",
            grammar,
        )
        fitted = fit_pipeline(tree, holey_blobs.values, holey_blobs.labels, seed=4)
        preds = fitted.predict(holey_blobs.values[:7])
        assert preds.shape == (7,)
        assert set(np.unique(preds)) <= {0, 1}


class TestHallOfFame:
    def _ind(self, grammar, text, acc, valid=True):
        tree = parse_tree(text, grammar)
        n = len(chain_nodes(tree))
        return Individual(tree=tree, size=n, accuracy=acc, valid=valid, evaluated=True)

    def test_dominated_members_evicted(self, grammar):
        hof = HallOfFame()
        hof.update(self._ind(grammar, "[GaussianNB, [MeanImputer, input_matrix]]", 0.6))
        hof.update(
            self._ind(grammar, "[GaussianNB, [MedianImputer, input_matrix]]", 0.9)
        )
        assert len(hof.members) == 1
        assert hof.best().accuracy == 0.9

    def test_tradeoffs_coexist(self, grammar):
        hof = HallOfFame()
        hof.update(self._ind(grammar, "[GaussianNB, [MeanImputer, input_matrix]]", 0.8))
        hof.update(
            self._ind(
                grammar,
                "[GaussianNB, [StandardScaler, [MeanImputer, input_matrix]]]",
                0.95,
            )
        )
        assert len(hof.members) == 2

    def test_invalid_never_admitted(self, grammar):
        hof = HallOfFame()
        hof.update(
            self._ind(grammar, "[GaussianNB, [MeanImputer, input_matrix]]", 0.0, False)
        )
        assert hof.members == []

    def test_duplicate_tree_replaced_not_duplicated(self, grammar):
        hof = HallOfFame()
        text = "[GaussianNB, [MeanImputer, input_matrix]]"
        hof.update(self._ind(grammar, text, 0.7))
        hof.update(self._ind(grammar, text, 0.7))
        assert len(hof.members) == 1


class TestEvolve:
    def test_run_is_reproducible(self, grammar, holey_blobs):
        cfg = EvolutionConfig(pop_size=8, generations=3, seed=11)
        r1 = evolve(holey_blobs, grammar, cfg)
        r2 = evolve(holey_blobs, grammar, cfg)
        assert r1.history == r2.history
        assert [serialize_tree(m.tree) for m in r1.hof] == [
            serialize_tree(m.tree) for m in r2.hof
        ]

    def test_seed_changes_run(self, grammar, holey_blobs):
        base = EvolutionConfig(pop_size=8, generations=2, seed=11)
        other = EvolutionConfig(pop_size=8, generations=2, seed=12)
        r1 = evolve(holey_blobs, grammar, base)
        r2 = evolve(holey_blobs, grammar, other)
        assert [serialize_tree(m.tree) for m in r1.hof] != [
            serialize_tree(m.tree) for m in r2.hof
        ]

    def test_history_monotone_and_sized(self, grammar, holey_blobs):
        cfg = EvolutionConfig(pop_size=8, generations=4, seed=2)
        res = evolve(holey_blobs, grammar, cfg)
        assert len(res.history) == 5
        assert all(b >= a for a, b in zip(res.history, res.history[1:]))

    def test_archive_is_nondominated_and_valid(self, grammar, holey_blobs):
        res = evolve(holey_blobs, grammar, EvolutionConfig(pop_size=10, generations=3, seed=7))
        members = res.hof
        assert members
        assert all(m.valid for m in members)
        for i, a in enumerate(members):
            for j, b in enumerate(members):
                if i != j:
                    assert not dominates(a.fitness, b.fitness) or a.fitness == b.fitness

    def test_evaluation_budget(self, grammar, holey_blobs):
        cfg = EvolutionConfig(pop_size=6, generations=3, seed=1)
        res = evolve(holey_blobs, grammar, cfg)
        assert res.n_evaluations == 6 * 4

    def test_zero_generations_returns_initial_archive(self, grammar, holey_blobs):
        res = evolve(holey_blobs, grammar, EvolutionConfig(pop_size=6, generations=0, seed=3))
        assert len(res.history) == 1
        assert res.hof

    def test_reproduction_only_run_copies_population(self, grammar, holey_blobs):
        cfg = EvolutionConfig(
            pop_size=6, generations=2, seed=5, crossover_prob=0.0, mutation_prob=0.0
        )
        res = evolve(holey_blobs, grammar, cfg)
        assert res.n_evaluations == 6
        assert len(res.history) == 3

    def test_progress_callback_sees_every_generation(self, grammar, holey_blobs):
        calls = []
        evolve(
            holey_blobs,
            grammar,
            EvolutionConfig(pop_size=6, generations=3, seed=4),
            progress=lambda gen, best, front: calls.append((gen, best, front)),
        )
        assert [c[0] for c in calls] == [0, 1, 2, 3]
        assert all(0 <= c[1] <= 1 for c in calls)
        assert all(c[2] >= 1 for c in calls)

    def test_population_trees_stay_valid(self, grammar, holey_blobs):
        res = evolve(holey_blobs, grammar, EvolutionConfig(pop_size=8, generations=3, seed=9))
        for ind in res.final_population:
            assert validate_tree(ind.tree, data_complete=False) == []


class TestImputreeClassifier:
    FAST = dict(pop_size=8, generations=2, seed=4)

    def test_fit_predict_on_missing_data(self, holey_blobs):
        from imputree.evolve import ImputreeClassifier

        clf = ImputreeClassifier(**self.FAST)
        clf.fit(holey_blobs.values, holey_blobs.labels)
        nodes = chain_nodes(clf.best_tree_)
        assert any(n.spec.role == "imputer" for n in nodes)
        pred = clf.predict(holey_blobs.values)
        assert set(pred) <= set(clf.classes_)
        assert np.mean(pred == holey_blobs.labels) > 0.7
        assert clf.best_pipeline_ == serialize_tree(clf.best_tree_)

    def test_complete_data_excludes_imputers_and_rejects_nan(self):
        from imputree.evolve import ImputreeClassifier

        data = make_blobs_matrix(n_rows=50, n_cols=3, n_classes=2, seed=11)
        clf = ImputreeClassifier(**self.FAST).fit(data.values, data.labels)
        assert all(n.spec.role != "imputer" for n in chain_nodes(clf.best_tree_))
        holed = np.array(data.values)
        holed[0, 0] = np.nan
        with pytest.raises(ValueError, match="missing"):
            clf.predict(holed)

    def test_string_labels_round_trip(self, holey_blobs):
        from imputree.evolve import ImputreeClassifier

        names = np.array(["spam", "ham"])[holey_blobs.labels]
        clf = ImputreeClassifier(**self.FAST)
        clf.fit(holey_blobs.values, names)
        assert list(clf.classes_) == ["ham", "spam"]
        assert set(clf.predict(holey_blobs.values)) <= {"ham", "spam"}

    def test_same_seed_same_pipeline(self, holey_blobs):
        from imputree.evolve import ImputreeClassifier

        a = ImputreeClassifier(**self.FAST).fit(holey_blobs.values, holey_blobs.labels)
        b = ImputreeClassifier(**self.FAST).fit(holey_blobs.values, holey_blobs.labels)
        assert a.best_pipeline_ == b.best_pipeline_

    def test_unfitted_predict_raises(self):
        from imputree.evolve import ImputreeClassifier
        from sklearn.exceptions import NotFittedError

        with pytest.raises(NotFittedError):
            ImputreeClassifier().predict(np.zeros((2, 2)))

    def test_clone_and_params(self):
        from imputree.evolve import ImputreeClassifier
        from sklearn.base import clone

        clf = ImputreeClassifier(pop_size=12, generations=5, seed=7)
        twin = clone(clf)
        assert twin.get_params() == clf.get_params()
        assert twin.get_params()["pop_size"] == 12
