from importlib import resources

import pytest

from wftas import goldens
from wftas.goldens import GoldenTable, GoldenTableError, STATE_ORDER


def _source_text() -> str:
    return resources.files("wftas.data").joinpath("golden_table.txt").read_text()


def test_state_order():
    assert len(STATE_ORDER) == 11
    assert STATE_ORDER[0] == "rst"


def test_table_shape(golden_table):
    assert len(golden_table.cells) == 121
    assert len(golden_table.reachable_cells()) == 98
    assert len(golden_table.unreachable_keys()) == 23


def test_structural_validation(golden_table):
    assert goldens.validate_goldens(golden_table) == []


def test_letter_mirror_symmetry(golden_table):
    assert goldens.check_letter_mirror_symmetry(golden_table) == []


def test_known_cells(golden_table):
    from wftas.protocol import ProcState as S

    assert golden_table.cell(S.RST, S.RST).expected == 10
    assert golden_table.cell(S.RST, S.RST).letters == frozenset("d")
    assert golden_table.cell(S.ME, S.ME).letters == frozenset("imoq")
    assert golden_table.cell(S.TST1, S.RST).expected == 11
    assert golden_table.cell(S.TST1, S.TST1) is None  # unreachable
    # entire tst0 row costs exactly one access
    for c in STATE_ORDER:
        cell = golden_table.cells[("tst0", c)]
        if cell is not None:
            assert cell.expected == 1


def test_parse_rejects_permuted_rows():
    lines = [
        raw for raw in _source_text().splitlines()
        if raw.strip() and not raw.lstrip().startswith("#")
    ]
    lines[1], lines[2] = lines[2], lines[1]
    with pytest.raises(GoldenTableError):
        GoldenTable.parse("\n".join(lines))


def test_parse_rejects_bad_cell():
    text = _source_text().replace("imoq9", "imoz9", 1)
    with pytest.raises(GoldenTableError):
        GoldenTable.parse(text)
