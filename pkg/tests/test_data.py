import numpy as np
import pytest

from nsdpp import data
from nsdpp.errors import DataError


def write(tmp_path, text, name="b.txt"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


class TestLoad:
    def test_basic(self, tmp_path):
        ds = data.load(write(tmp_path, "a,b\nb,c\n"))
        assert ds.M == 3 and ds.baskets == ((0, 1), (1, 2))
        assert ds.item_vocab == ("a", "b", "c")
        assert ds.index_of("c") == 2 and ds.item_id(0) == "a"

    def test_duplicates_removed(self, tmp_path):
        ds = data.load(write(tmp_path, "a,a,b\n"))
        assert ds.baskets == ((0, 1),) and ds.stats.duplicates_removed == 1

    def test_small_and_empty_lines_dropped(self, tmp_path):
        ds = data.load(write(tmp_path, "a\n\nb,c\nd,d\n"))
        assert ds.baskets == ((0, 1),) and ds.stats.dropped_small == 3
        assert ds.item_vocab == ("b", "c")  # vocab only from kept baskets

    def test_max_basket_size(self, tmp_path):
        big = ",".join(f"i{k}" for k in range(101))
        ds = data.load(write(tmp_path, f"{big}\na,b\n"), max_basket_size=100)
        assert len(ds.baskets) == 1 and ds.stats.dropped_oversize == 1

    def test_malformed_line_number(self, tmp_path):
        with pytest.raises(DataError, match="line 2"):
            data.load(write(tmp_path, "a,b\na,,b\n"))

    def test_nothing_usable(self, tmp_path):
        with pytest.raises(DataError):
            data.load(write(tmp_path, "a\nb\n"))

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError):
            data.load(tmp_path / "nope.txt")

    def test_round_trip(self, tmp_path):
        src = write(tmp_path, "x,y,z\nz,w\ny,x\n")
        ds = data.load(src)
        data.write(ds, tmp_path / "out.txt")
        again = data.load(tmp_path / "out.txt")
        assert again.baskets == ds.baskets and again.item_vocab == ds.item_vocab

    def test_unknown_item(self, tmp_path):
        ds = data.load(write(tmp_path, "a,b\n"))
        with pytest.raises(KeyError):
            ds.index_of("zz")
        plain = data.BasketDataset.from_baskets([[0, 1]], 2)
        assert plain.index_of("1") == 1
        for bad in ("2", "-1", "x"):
            with pytest.raises(KeyError):
                plain.index_of(bad)


class TestFromBaskets:
    def test_out_of_range(self):
        with pytest.raises(DataError):
            data.BasketDataset.from_baskets([[0, 3]], 3)

    def test_repeat(self):
        with pytest.raises(DataError):
            data.BasketDataset.from_baskets([[1, 1]], 3)


class TestSplit:
    def make(self, n=10, M=6, seed=0):
        rng = np.random.default_rng(seed)
        return data.BasketDataset.from_baskets(
            [sorted(rng.choice(M, 3, replace=False).tolist()) for _ in range(n)], M)

    def test_fractions(self):
        ds = data.split(self.make(10), seed=3)
        assert len(ds.test) == 2
        assert len(ds.train) + len(ds.validation) == 8 and len(ds.validation) >= 1

    def test_deterministic(self):
        a, b = data.split(self.make(), seed=5), data.split(self.make(), seed=5)
        np.testing.assert_array_equal(a.splits, b.splits)

    def test_lambda_from_train_only(self):
        ds = data.split(self.make(200, M=40), seed=1)
        counts = np.zeros(40)
        for b in ds.train:
            counts[list(b)] += 1
        np.testing.assert_array_equal(ds.lam, counts)
        assert ds.lam.sum() == sum(len(b) for b in ds.train)

    def test_test_only_item_falls_back_to_unit_weight(self):
        from nsdpp.likelihood import RegularizationConfig
        base = data.BasketDataset.from_baskets([[0, 1]] * 9 + [[2, 3]], 4)
        for seed in range(100):
            ds = data.split(base, seed=seed)
            if (2, 3) in ds.test:
                break
        assert ds.lam[2] == 0
        assert RegularizationConfig(lam=ds.lam).inverse_counts(4)[2] == 1.0

    @pytest.mark.parametrize("kw", [dict(train_frac=1.0), dict(val_frac_of_train=0.0)])
    def test_bad_fractions(self, kw):
        with pytest.raises(DataError):
            data.split(self.make(), **kw)

    def test_too_few(self):
        with pytest.raises(DataError):
            data.split(self.make(2))

    def test_manifest(self, tmp_path):
        ds = data.split(self.make(), seed=0)
        data.write_split_manifest(ds, tmp_path / "s.tsv")
        lines = (tmp_path / "s.tsv").read_text().splitlines()
        assert len(lines) == 10
        assert {l.split("\t")[1] for l in lines} == {"train", "validation", "test"}


def test_categories(tmp_path):
    ds = data.load(write(tmp_path, "a,b\nb,c\n"))
    cats = data.read_categories(write(tmp_path, "a\tX\nc\tY\nq\tZ\n", "c.tsv"), ds)
    assert cats.tolist() == ["X", None, "Y"]
    with pytest.raises(DataError, match="line 1"):
        data.read_categories(write(tmp_path, "a X\n", "bad.tsv"), ds)
