import csv

from verexp import report
from verexp.audit import rho_distance, sampling_chisquare, utility_bound_audit
from verexp.params import ProtocolParams, build_table
from verexp.exactmath import Epsilon

P3 = ProtocolParams(range=(0, 1, 2), m=2, epsilon="2*ln(2)", method="setk", l=3)


def test_csv_and_json(tmp_path):
    paths = report.out_paths(tmp_path / "x", "demo")
    report.write_csv(paths["csv"], [{"a": 1, "b": "2/3"}, {"a": 2, "b": "1/1"}])
    with open(paths["csv"]) as fh:
        assert list(csv.DictReader(fh)) == [{"a": "1", "b": "2/3"}, {"a": "2", "b": "1/1"}]
    report.write_json(paths["json"], {"k": 1})
    assert open(paths["json"]).read().strip() == '{\n  "k": 1\n}'


def test_figures_written(tmp_path):
    pngs = [
        report.plot_table_error(build_table("1", 16, "setk"), Epsilon.parse("1"), tmp_path / "t.png"),
        report.plot_distribution_pair(P3, (1, 2), (1, 1), tmp_path / "d.png"),
        report.plot_utility(utility_bound_audit(P3, [1, 1]), tmp_path / "u.png"),
        report.plot_sampling(sampling_chisquare([1, 1], P3, 1000, 1e-3, seed=0), P3, tmp_path / "s.png"),
        report.plot_rho([rho_distance(31, s).to_dict() for s in range(1, 20)], tmp_path / "r.png"),
        report.plot_bench([{"m": 2, "t_w": 0.1, "t_p": 0.2, "t_v": 0.01}], tmp_path / "b.png"),
    ]
    for p in pngs:
        with open(p, "rb") as fh:
            assert fh.read(8) == b"\x89PNG\r\n\x1a\n"
