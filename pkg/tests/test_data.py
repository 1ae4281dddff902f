from pathlib import Path

import numpy as np
import pytest

from brann.data import (INHOUSE, NASA, NUAA, PHM2010, SCHEMAS, DataError, Dataset, FeatureSchema,
                        Parameter, SchemaError, SplitSpec, align_features, collapse_targets,
                        dataset_to_csv, get_schema, load_feature_table, load_features,
                        qualify_cases, save_features, split, union_features, union_schemas)

FIXTURES = Path(__file__).parent / "fixtures"
TINY = FeatureSchema("tiny", process_params=(Parameter("DOC", "mm"),), channels=(Parameter("SMCAC", "A"),))


def make(names, n=3, targets=("vb_mm",), case="a", units=None, offset=0.0):
    X = np.arange(n * len(names), dtype=float).reshape(n, len(names)) + offset
    Y = np.linspace(0.1, 0.3, n * len(targets)).reshape(n, len(targets))
    return Dataset(X, Y, names, targets, [(case, i + 1) for i in range(n)], units)


def sized(sizes):
    prov = [(f"c{k}", i + 1) for k, s in enumerate(sizes) for i in range(s)]
    n = len(prov)
    return Dataset(np.arange(n, dtype=float).reshape(-1, 1), np.zeros(n), ("x",), ("y",), prov)


class TestSchemas:
    def test_feature_counts(self):
        assert NASA.n_features == 20
        assert PHM2010.n_features == 21
        assert NUAA.n_features == 24
        assert INHOUSE.n_features == 12

    def test_feature_naming(self):
        assert NASA.feature_names[:5] == ("DOC", "FEED", "SMCAC_min", "SMCAC_max", "SMCAC_mean")

    def test_union_has_23_input_parameters(self):
        u = union_schemas((NASA, PHM2010, NUAA))
        assert len(u.input_parameters) == 23
        assert u.n_features == 65
        assert SCHEMAS["union"].feature_names == u.feature_names

    def test_inhouse_is_subset_of_union(self):
        assert set(INHOUSE.feature_names) <= set(SCHEMAS["union"].feature_names)

    def test_conflicting_units(self):
        other = FeatureSchema("x", channels=(Parameter("SMCAC", "V"),))
        with pytest.raises(SchemaError, match="conflicting units"):
            union_schemas((TINY, other))

    def test_unknown_schema(self):
        with pytest.raises(SchemaError, match="unknown schema"):
            get_schema("nope")


class TestDataset:
    def test_row_mismatch(self):
        with pytest.raises(DataError):
            Dataset(np.zeros((3, 1)), np.zeros(2), ("x",), ("y",), [("a", 1)] * 3)

    def test_infinite_rejected(self):
        with pytest.raises(DataError):
            Dataset([[np.inf]], [0.0], ("x",), ("y",), [("a", 1)])

    def test_nan_feature_allowed_nan_target_not(self):
        assert Dataset([[np.nan]], [0.0], ("x",), ("y",), [("a", 1)]).has_missing
        with pytest.raises(DataError):
            Dataset([[0.0]], [np.nan], ("x",), ("y",), [("a", 1)])

    def test_immutable(self):
        ds = make(("a",))
        with pytest.raises(ValueError):
            ds.X[0, 0] = 9.0


class TestLoad:
    def test_golden_fixture(self):
        ds = load_features(FIXTURES / "golden_tiny.csv", TINY)
        assert len(ds) == 5
        assert ds.provenance == (("1", 1), ("1", 2), ("1", 3), ("2", 1), ("2", 2))
        np.testing.assert_array_equal(ds.X[2], [1.5, 0.05, 1.3, 0.6])
        np.testing.assert_array_equal(ds.Y.ravel(), [0.05, 0.09, 0.14, 0.03, 0.07])

    def test_no_rows(self, tmp_path):
        path = tmp_path / "f.csv"
        path.write_text("case_id,cut_index,DOC,SMCAC_min,SMCAC_max,SMCAC_mean,vb_mm\n")
        with pytest.raises(DataError, match="no rows"):
            load_features(path, TINY)

    def test_header_permutation_names_first_mismatch(self, tmp_path):
        path = tmp_path / "f.csv"
        path.write_text("case_id,cut_index,DOC,SMCAC_max,SMCAC_min,SMCAC_mean,vb_mm\n1,1,1,1,1,1,1\n")
        with pytest.raises(DataError, match="expected 'SMCAC_min', got 'SMCAC_max'"):
            load_features(path, TINY)

    @pytest.mark.parametrize("cell", ["nan", "inf", "-Infinity", "abc"])
    def test_bad_cells(self, tmp_path, cell):
        path = tmp_path / "f.csv"
        path.write_text(f"case_id,cut_index,DOC,SMCAC_min,SMCAC_max,SMCAC_mean,vb_mm\n1,1,1,{cell},1,1,1\n")
        with pytest.raises(DataError, match=r"f.csv:2: column 'SMCAC_min'"):
            load_features(path, TINY)

    def test_missing_target(self, tmp_path):
        path = tmp_path / "f.csv"
        path.write_text("case_id,cut_index,DOC,SMCAC_min,SMCAC_max,SMCAC_mean,vb_mm\n1,1,1,1,1,1,\n")
        with pytest.raises(DataError, match="missing target"):
            load_features(path, TINY)

    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        X = rng.normal(size=(7, 4)) * 1e3
        X[2, 1] = np.nan
        ds = Dataset(X, rng.uniform(size=7), TINY.feature_names, TINY.targets,
                     [("c", i + 1) for i in range(7)], TINY.feature_units)
        save_features(ds, tmp_path / "f.csv")
        back = load_features(tmp_path / "f.csv", TINY)
        np.testing.assert_array_equal(back.X, ds.X)
        np.testing.assert_array_equal(back.Y, ds.Y)
        assert back.provenance == ds.provenance

    def test_lenient_load(self):
        ds = load_feature_table(FIXTURES / "golden_tiny.csv")
        assert ds.target_names == () and ds.X.shape == (5, 5)


class TestSplit:
    def test_partition(self):
        ds = sized([10])
        tr, te = split(ds, SplitSpec(0.7, seed=3))
        assert (len(tr), len(te)) == (7, 3)
        assert set(tr.provenance) | set(te.provenance) == set(ds.provenance)
        assert not set(tr.provenance) & set(te.provenance)

    def test_deterministic(self):
        ds = sized([25])
        a, b = split(ds, SplitSpec(0.8, seed=1)), split(ds, SplitSpec(0.8, seed=1))
        assert a.train_rows == b.train_rows
        assert a.train_rows != split(ds, SplitSpec(0.8, seed=2)).train_rows

    def test_by_case_greedy(self):
        res = split(sized([5, 3, 2]), SplitSpec(0.8, mode="by_case"))
        assert {c for c, _ in res.train.provenance} == {"c0", "c1"}
        assert {c for c, _ in res.test.provenance} == {"c2"}

    def test_empty_side(self):
        with pytest.raises(DataError):
            split(sized([3]), SplitSpec(0.1))
        with pytest.raises(DataError):
            split(sized([4]), SplitSpec(0.5, mode="by_case"))

    @pytest.mark.parametrize("frac", [0.0, 1.0, -0.2])
    def test_bad_fraction(self, frac):
        with pytest.raises(ValueError):
            SplitSpec(frac)

    def test_report_lists_rows(self):
        rep = split(sized([10]), SplitSpec(0.7, seed=0)).report()
        assert "seed = 0" in rep and rep.count("\n") == 5


class TestUnion:
    def test_disjoint(self):
        u = union_features([make(("a", "b")), make(("c", "d", "e"), n=2, case="b")])
        assert u.feature_names == ("a", "b", "c", "d", "e") and len(u) == 5
        assert np.isnan(u.X[0, 2]) and np.isnan(u.X[3, 0])

    def test_shared_column_once(self):
        u = union_features([make(("force_x", "a")), make(("force_x", "b"), case="b")])
        assert u.feature_names.count("force_x") == 1
        assert not np.any(np.isnan(u.X[:, u.feature_names.index("force_x")]))

    def test_commutative_up_to_rows(self):
        a, b = make(("a", "b")), make(("b", "c"), case="b", offset=100)
        ab, ba = union_features([a, b]), union_features([b, a])
        assert ab.feature_names == ba.feature_names
        np.testing.assert_array_equal(ab.X[:3], ba.X[3:])

    def test_associative(self):
        a, b, c = make(("a",)), make(("b",), case="b"), make(("a", "c"), case="c")
        left = union_features([union_features([a, b]), c])
        right = union_features([a, union_features([b, c])])
        np.testing.assert_array_equal(left.X, right.X)
        assert left.feature_names == right.feature_names

    def test_conflicting_units(self):
        with pytest.raises(SchemaError):
            union_features([make(("a",), units=("N",)), make(("a",), units=("V",), case="b")])

    def test_targets_must_agree(self):
        with pytest.raises(SchemaError, match="collapse"):
            union_features([make(("a",)), make(("a",), targets=("f1", "f2"))])

    def test_collapse_and_qualify(self):
        ds = qualify_cases(collapse_targets(make(("a",), targets=("f1", "f2"))), "phm")
        assert ds.target_names == ("vb_mm",) and ds.provenance[0] == ("phm:a", 1)
        np.testing.assert_allclose(ds.Y.ravel(), [0.14, 0.22, 0.3])

    def test_align(self):
        X, missing = align_features(make(("b", "a")), ("a", "z", "b"))
        assert missing == ["z"]
        np.testing.assert_array_equal(X[0], [1.0, np.nan, 0.0])

    def test_csv_empty_cells_for_missing(self):
        text = dataset_to_csv(union_features([make(("a",), n=1), make(("b",), n=1, case="b")]))
        assert text.splitlines()[1] == "a,1,0.0,,0.1"
