import pytest

from ce_precoding.experiments import ExperimentRow, format_csv
from ce_precoding.plots import emit_plots, render_svg


def power_csv():
    rows = [
        ExperimentRow("power-vs-n", 4, n, 0, 1.0,
                      {"target_rate_bpcu": 2.0, "pt_db_ce": ce, "pt_db_coop": co, "gap_db": ce - co})
        for n, ce, co in [(32, -4.0, -4.5), (64, -7.0, -7.3), (128, -10.0, -10.2)]
    ]
    return format_csv(rows)


def test_power_plot_has_two_curves():
    svg = render_svg(power_csv())["power-vs-n"]
    assert svg.count("<polyline") == 2
    assert "cooperative bound" in svg and "log2 N" in svg


def test_mui_plot_uses_log_axis():
    rows = [ExperimentRow("mui-vs-n", 12, n, 0, 1.0,
                          {"alphabet": "16QAM", "ek": 1.0, "n_channels": 2, "n_symbol_draws": 2,
                           "mui_mean": v, "mui_stderr": 0.0})
            for n, v in [(24, 0.03), (48, 1e-8)]]
    svg = render_svg(format_csv(rows))["mui-vs-n"]
    assert svg.count("<polyline") == 1 and "(log10)" in svg


def test_deterministic(tmp_path):
    text = power_csv()
    assert render_svg(text) == render_svg(text)
    path = tmp_path / "power_vs_n.csv"
    path.write_text(text)
    first = emit_plots(path)[0].read_bytes()
    assert emit_plots(path)[0].read_bytes() == first


@pytest.mark.parametrize("text", ["", "variant,m,n,target_rate_bpcu,pt_db_ce,pt_db_coop,gap_db,seed,wall_time_s\n",
                                  "a,b\n1,2\n"])
def test_bad_csv_writes_nothing(tmp_path, text):
    path = tmp_path / "x.csv"
    path.write_text(text)
    with pytest.raises(ValueError):
        emit_plots(path)
    assert not (tmp_path / "x.svg").exists()
