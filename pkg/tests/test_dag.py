import pytest

from src.errors import DagValidationError, InputFormatError
from src.integrations.dag_file import format_dag_text, parse_dag_text
from src.models.dag import AppDag, check_dag_parts, validate_dag
from src.models.transfers import edge_delay, result_time, stage_release, transfer_indicators


class TestValidateDag:
    def test_valid_chain(self):
        assert check_dag_parts(2, [(0, 1)]) is None

    def test_cycle(self):
        error = check_dag_parts(2, [(0, 1), (1, 0)])
        assert error.rule == "cycle"

    def test_isolated_stage(self):
        error = check_dag_parts(3, [(0, 1)])
        assert error.rule == "reachability"

    def test_out_degree_mismatch(self):
        error = check_dag_parts(3, [(0, 1), (0, 2)], out_degree=[1, 0, 0])
        assert error.rule == "out_degree"

    def test_built_dag(self, diamond, chain3):
        assert validate_dag(diamond) is None
        assert validate_dag(chain3) is None

    def test_built_dag_is_rechecked(self, chain2):
        object.__setattr__(chain2, "edges", ((0, 1), (1, 0)))
        assert validate_dag(chain2).rule == "cycle"

    def test_built_dag_out_degree_is_recounted(self, diamond):
        object.__setattr__(diamond, "edges", ((0, 1), (1, 3), (2, 3), (0, 2), (2, 1)))
        assert validate_dag(diamond).rule == "out_degree"

    def test_constructor_raises(self):
        with pytest.raises(DagValidationError):
            AppDag(("a", "b"), ((0, 1), (1, 0)), (1, 1), (1.0, 1.0))

    def test_zero_replicas(self):
        with pytest.raises(DagValidationError):
            AppDag(("a",), (), (0,), (1.0,))


def test_structure_queries(diamond):
    assert diamond.sources == (0,)
    assert diamond.sinks == (3,)
    assert diamond.successors(0) == (1, 2)
    assert diamond.predecessors(3) == (1, 2)
    assert diamond.out_degree == (2, 1, 1, 0)
    assert diamond.topological_order == (0, 1, 2, 3)
    assert diamond.stage_index("c") == 2
    with pytest.raises(DagValidationError):
        diamond.stage_index("z")


class TestDagFile:
    TEXT = (
        "# video pipeline\n"
        "stage extract replicas=2 mem_mb=1024\n"
        "stage detect replicas=2 mem_mb=3008\n"
        "stage recognize replicas=1 mem_mb=1024\n"
        "stage merge replicas=1 mem_mb=512\n"
        "edge extract detect\n"
        "edge extract recognize\n"
        "edge detect merge\n"
        "edge recognize merge\n"
        "must_private merge\n"
    )

    def test_parse(self):
        dag = parse_dag_text(self.TEXT)
        assert dag.names == ("extract", "detect", "recognize", "merge")
        assert dag.replicas == (2, 2, 1, 1)
        assert dag.memory_mb == (1024.0, 3008.0, 1024.0, 512.0)
        assert dag.edges == ((0, 1), (0, 2), (1, 3), (2, 3))
        assert dag.default_must_private == frozenset({3})

    def test_format_parses_back(self):
        dag = parse_dag_text(self.TEXT)
        assert parse_dag_text(format_dag_text(dag)) == dag

    def test_unknown_stage_cites_line(self):
        with pytest.raises(InputFormatError) as info:
            parse_dag_text("stage a replicas=1 mem_mb=1\nedge a b\n", "app.dag")
        assert info.value.line == 2
        assert "app.dag:2" in str(info.value)

    def test_edge_before_stage_rejected(self):
        with pytest.raises(InputFormatError):
            parse_dag_text("stage a replicas=1 mem_mb=1\nedge a a\nstage b replicas=1 mem_mb=1\n")

    def test_cycle_reported_as_input_error(self):
        with pytest.raises(InputFormatError):
            parse_dag_text("stage a replicas=1 mem_mb=1\nstage b replicas=1 mem_mb=1\nedge a b\nedge b a\n")


class TestTransfers:
    def test_edge_delay(self):
        assert edge_delay(False, True, 5.0, 7.0) == 5.0
        assert edge_delay(True, False, 5.0, 7.0) == 7.0
        assert edge_delay(True, True, 5.0, 7.0) == 0.0
        assert edge_delay(False, False, 5.0, 7.0) == 0.0

    def test_public_source_waits_for_upload(self, chain2):
        assert stage_release(chain2, 0, [True, True], [None, None], [50.0, 9.0], [0.0, 0.0]) == 50.0
        assert stage_release(chain2, 0, [False, False], [None, None], [50.0, 9.0], [0.0, 0.0]) == 0.0

    def test_private_to_public_edge(self, chain2):
        assert stage_release(chain2, 1, [False, True], [100.0, None], [50.0, 9.0], [3.0, 4.0]) == 109.0

    def test_public_sink_result_includes_download(self, chain2):
        assert result_time(chain2, 1, [True, True], 300.0, [0.0, 50.0]) == 350.0
        assert result_time(chain2, 1, [False, False], 300.0, [0.0, 50.0]) == 300.0

    def test_indicators(self, diamond):
        # a private, b public, c private, d private
        rows = transfer_indicators(diamond, [False, True, False, False])
        assert rows[0] == (1, 1, 0)
        assert rows[1] == (-1, 0, 1)
        assert rows[3] == (0, 0, 0)
