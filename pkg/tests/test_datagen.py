import json
import warnings

import numpy as np
import pytest

from fairsketch.datagen import (
    DistributionSpec,
    apply_grouping,
    gen_frequencies,
    generate_from_genspec,
    generate_grouped,
    generate_sourced,
    group_by_rank,
    group_by_threshold,
    group_equi_width,
    ingest_csv,
    load_dataset,
    parse_genspec,
    summary_path,
)
from fairsketch.errors import DatasetError


class TestDistributions:
    def test_parse_and_str(self):
        d = DistributionSpec.parse("gaussian:100,50")
        assert d == DistributionSpec("gaussian", (100.0, 50.0))
        assert str(d) == "gaussian:100,50"

    @pytest.mark.parametrize("text", ["poisson:3", "gaussian:1", "gaussian:1,-1", "uniform:5,1", "zipf:0", "zipf:x"])
    def test_bad_specs(self, text):
        with pytest.raises(ValueError):
            DistributionSpec.parse(text)

    def test_degenerate_uniform(self):
        assert gen_frequencies(DistributionSpec("uniform", (5, 5)), 10).tolist() == [5] * 10

    def test_gaussian_mean(self):
        f = gen_frequencies(DistributionSpec("gaussian", (100, 50)), 10**4, seed=1)
        assert abs(f.mean() - 100) <= 2
        assert f.min() >= 1

    def test_exponential_is_rate(self):
        f = gen_frequencies(DistributionSpec("exponential", (0.01,)), 10**4, seed=2)
        assert f.mean() == pytest.approx(100, rel=0.05)

    def test_zipf_rank_ratio(self):
        ratios = []
        for seed in range(20):
            f = gen_frequencies(DistributionSpec("zipf", (1.0,)), 1000, seed=seed)
            ratios.append(f[0] / f[1])
        assert np.mean(ratios) == pytest.approx(2.0, rel=0.15)

    def test_deterministic(self):
        d = DistributionSpec("zipf", (1.1,))
        assert (gen_frequencies(d, 100, 3) == gen_frequencies(d, 100, 3)).all()
        assert not (gen_frequencies(d, 100, 3) == gen_frequencies(d, 100, 4)).all()
        with pytest.raises(ValueError):
            gen_frequencies(d, 0)


class TestGrouping:
    def test_threshold(self):
        with pytest.warns(UserWarning):
            assert group_by_threshold([1, 5, 9], 0).tolist() == [1, 1, 1]
        with pytest.warns(UserWarning):
            assert group_by_threshold([1, 5, 9], 100).tolist() == [0, 0, 0]
        assert group_by_threshold([10, 1000], 100).tolist() == [0, 1]
        assert group_by_threshold([99, 100], 100).tolist() == [0, 1]

    def test_equi_width_boundaries(self):
        labels = group_equi_width(np.arange(1, 101), 4)
        changes = [i + 1 for i in range(99) if labels[i] != labels[i + 1]]
        assert changes == [25, 50, 75]  # boundaries 25.75, 50.5, 75.25
        assert labels.min() == 0 and labels.max() == 3

    def test_equi_width_two_is_midpoint_threshold(self):
        f = np.random.default_rng(0).integers(1, 500, 300)
        mid = (f.min() + f.max()) / 2
        assert (group_equi_width(f, 2) == group_by_threshold(f, mid)).all()

    def test_equi_width_degenerate(self):
        with pytest.warns(UserWarning):
            assert group_equi_width([3, 3, 3], 3).tolist() == [0, 0, 0]
        with pytest.raises(ValueError):
            group_equi_width([1, 2], 1)

    def test_rank(self):
        assert group_by_rank([5, 1, 5, 5], 2).tolist() == [0, 0, 1, 1]
        with pytest.raises(ValueError):
            group_by_rank([1, 2], 2)

    def test_apply(self):
        f = [1, 2, 30, 40]
        assert apply_grouping(f, "threshold:10").tolist() == [0, 0, 1, 1]
        assert apply_grouping(f, "rank:1").tolist() == [0, 1, 1, 1]
        assert apply_grouping(f, "equi-width:2").tolist() == [0, 0, 1, 1]
        with pytest.raises(ValueError):
            apply_grouping(f, "kmeans:2")


class TestDatasets:
    def test_partition_and_totals(self):
        ds = generate_grouped(DistributionSpec("zipf", (1.0,)), 500, 1, "threshold:5")
        s = ds.summary()
        assert sum(s["n_g"]) == s["n"] == 500
        assert sum(s["N_g"]) == s["N"] == int(ds.freqs.sum())

    def test_sourced(self):
        ds = generate_sourced([DistributionSpec("uniform", (1, 1)), DistributionSpec("uniform", (9, 9))], [3, 2], 0)
        assert ds.groups.tolist() == [0, 0, 0, 1, 1]
        assert ds.freqs.tolist() == [1, 1, 1, 9, 9]
        assert len(set(ds.keys)) == 5

    def test_round_trip(self, tmp_path):
        ds = generate_from_genspec(parse_genspec("n=10000;nl=9000;l=gaussian:100,50;h=gaussian:1000,500"), 4)
        p = tmp_path / "d.csv"
        ds.write_csv(p)
        back = load_dataset(p)
        assert back.summary() == ds.summary()
        assert json.loads(summary_path(p).read_text()) == ds.summary()
        o1, o2 = ds.oracle(), back.oracle()
        assert (o1.N, o1.group_sizes(), o1.group_masses()) == (o2.N, o2.group_sizes(), o2.group_masses())

    def test_byte_identical(self, tmp_path):
        spec = parse_genspec("n=300;dist=zipf:1.1;group=threshold:20")
        for name in ("a", "b"):
            generate_from_genspec(spec, 9).write_csv(tmp_path / f"{name}.csv")
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()

    def test_genspec_errors(self):
        for bad in ["dist=zipf:1", "n=10", "n=10;dist", "n=10;l=zipf:1"]:
            with pytest.raises(ValueError):
                parse_genspec(bad)

    def test_genspec_n_low_override(self):
        spec = parse_genspec("n=1000;dist=zipf:1.0")
        assert generate_from_genspec(spec, 0, n_low=300).oracle().group_sizes() == [300, 700]
        spec = parse_genspec("n=1000;l=uniform:1,5;h=uniform:50,60")
        assert generate_from_genspec(spec, 0).oracle().group_sizes() == [500, 500]


class TestIngest:
    def write(self, tmp_path, text, name="in.csv"):
        p = tmp_path / name
        p.write_text(text, encoding="utf-8")
        return p

    def test_aggregates_events(self, tmp_path):
        p = self.write(tmp_path, "user,g\na,x\na,x\na,x\n")
        ds = ingest_csv(p, ["user"], "g")
        assert ds.keys == ["a"] and ds.freqs.tolist() == [3]

    def test_count_column(self, tmp_path):
        p = self.write(tmp_path, "user,g,c\na,x,7\n")
        assert ingest_csv(p, ["user"], "g", "c").freqs.tolist() == [7]

    def test_crafted_fixture(self, tmp_path):
        rows = [
            ("u1", "low", 1), ("u2", "low", 2), ("u1", "low", 3), ("u3", "high", 10),
            ("u4", "high", 5), ("u3", "high", 1), ("u5", "low", 1), ("u6", "mid", 4),
            ("u6", "mid", 4), ("u2", "low", 1),
        ]
        text = "element,group,count\n" + "".join(f"{k},{g},{c}\n" for k, g, c in rows)
        ds = load_dataset(self.write(tmp_path, text))
        s = ds.summary()
        # hand aggregation: low = u1:4 u2:3 u5:1, high = u3:11 u4:5, mid = u6:8
        assert s["n"] == 6 and s["N"] == 32
        assert s["groups"] == ["high", "low", "mid"]
        assert s["n_g"] == [2, 3, 1] and s["N_g"] == [16, 8, 8]

    def test_multi_column_keys_escape(self, tmp_path):
        p = self.write(tmp_path, "a,b,g\nx|y,z,0\nx,y|z,0\n")
        ds = ingest_csv(p, ["a", "b"], "g")
        assert len(ds.keys) == 2

    def test_numeric_group_order(self, tmp_path):
        p = self.write(tmp_path, "element,group,count\na,10,1\nb,9,1\n")
        assert load_dataset(p).group_names == ["9", "10"]

    @pytest.mark.parametrize(
        "text,line",
        [
            ("element,count\na,1\n", 1),
            ("element,group,count\na,0,1\nb,0\n", 3),
            ("element,group,count\na,0,x\n", 2),
            ("element,group,count\na,0,0\n", 2),
            ("element,group,count\na,0,1\na,1,1\n", 3),
            ("", 1),
        ],
    )
    def test_errors_carry_line(self, tmp_path, text, line):
        with pytest.raises(DatasetError) as exc:
            load_dataset(self.write(tmp_path, text))
        assert exc.value.line == line
        assert str(exc.value).startswith(f"line {line}:")

    def test_missing_file(self, tmp_path):
        with pytest.raises(DatasetError):
            load_dataset(tmp_path / "nope.csv")
