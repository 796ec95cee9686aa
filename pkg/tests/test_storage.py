import random

import pytest

from geocausal.errors import ParseError, SchemaViolation, UnknownEntity
from geocausal.graph import Derived, KnowledgeGraph, RelationKind
from geocausal.model import GeoEvent, GeoObject, GeoSituation, Measurement, Point, SpatioTemporalRegion
from geocausal.storage import dump_graph, graphs_equal, load_graph, loads_graph, save_graph
from geocausal.units import Categorical

from support import iv, q, random_storage_graph


class TestRoundTrip:
    def test_empty_graph(self):
        g = KnowledgeGraph()
        assert graphs_equal(g, loads_graph(dump_graph(g)))

    def test_fixture_graph(self, flood_case_a):
        g, _ = flood_case_a
        g.assert_triple("ev:heavyrain", RelationKind.CAUSES, "ev:flashflood")
        loaded = loads_graph(dump_graph(g))
        assert graphs_equal(g, loaded)
        assert dump_graph(loaded) == dump_graph(g)

    def test_measurements_survive(self):
        g = KnowledgeGraph()
        g.add_entity(
            GeoObject(
                "obj:atm",
                "Atmosphere",
                (
                    Measurement("WindSpeed", q(130, "kn")),
                    Measurement("SeaSurfaceTemp", q(27.5, "degC")),
                    Measurement("CoriolisForce", Categorical("present")),
                ),
            )
        )
        g.add_entity(
            GeoSituation("sit:x", iv(0, 6), (Measurement("WaterLevel", q(12, "m")),))
        )
        loaded = loads_graph(dump_graph(g))
        assert loaded.entity("obj:atm") == g.entity("obj:atm")
        assert loaded.entity("sit:x") == g.entity("sit:x")

    def test_derived_provenance_survives(self):
        g = KnowledgeGraph()
        g.add_entity(GeoEvent("ev:a", "Rain"))
        g.add_entity(GeoEvent("ev:b", "Flood"))
        g.add_triple(
            "ev:a",
            RelationKind.CAUSES,
            "ev:b",
            Derived("R-CAU:R1", (("x", RelationKind.CAUSES, "y"), ("p", RelationKind.CAUSES, "q"))),
        )
        loaded = loads_graph(dump_graph(g))
        t = loaded.match(predicate=RelationKind.CAUSES)[0]
        assert t.is_derived
        assert t.provenance.rule_id == "R-CAU:R1"
        assert t.provenance.count == 2
        assert dump_graph(loaded) == dump_graph(g)

    def test_file_round_trip(self, tmp_path, flood_case_a):
        g, _ = flood_case_a
        target = tmp_path / "graph.txt"
        save_graph(g, target)
        assert graphs_equal(g, load_graph(target))

    def test_stream_round_trip(self, flood_case_a):
        import io

        g, _ = flood_case_a
        buffer = io.StringIO()
        save_graph(g, buffer)
        buffer.seek(0)
        assert graphs_equal(g, load_graph(buffer))

    def test_randomized_graphs(self):
        rng = random.Random(42)
        for _ in range(15):
            g = random_storage_graph(rng, rng.randint(0, 200))
            text = dump_graph(g)
            loaded = loads_graph(text)
            assert graphs_equal(g, loaded)
            assert dump_graph(loaded) == text


class TestDocumentErrors:
    def test_parse_error_carries_line_number(self):
        with pytest.raises(ParseError) as exc:
            loads_graph("# ok\nENT ev:x event\n")
        assert exc.value.line == 2

    def test_schema_violation_at_load(self):
        doc = "\n".join(
            [
                "ENT obj:dam object Dam",
                "ENT ev:flood event Flood",
                "TRI obj:dam causes ev:flood",
            ]
        )
        with pytest.raises(SchemaViolation) as exc:
            loads_graph(doc)
        assert "line 3" in str(exc.value)

    def test_unknown_reference(self):
        with pytest.raises(UnknownEntity):
            loads_graph("ENT ev:a event Rain\nTRI ev:a causes ev:ghost\n")

    def test_unknown_tag(self):
        with pytest.raises(ParseError):
            loads_graph("FOO bar\n")

    def test_unknown_relation_token(self):
        doc = "ENT ev:a event Rain\nENT ev:b event Flood\nTRI ev:a explodes ev:b\n"
        with pytest.raises(ParseError):
            loads_graph(doc)

    def test_duplicate_entity_line(self):
        doc = "ENT ev:a event Rain\nENT ev:a event Flood\n"
        with pytest.raises(ParseError) as exc:
            loads_graph(doc)
        assert exc.value.line == 2

    def test_bad_region(self):
        with pytest.raises(ParseError):
            loads_graph("REG reg:r POINT(91 0) 2005-08-01T00:00:00Z 2005-08-02T00:00:00Z\n")

    def test_situation_needs_bounds(self):
        with pytest.raises(ParseError):
            loads_graph("ENT sit:x situation - .start=2005-08-01T00:00:00Z\n")


class TestFormatDetails:
    def test_comments_and_blank_lines_ignored(self):
        doc = "# a comment\n\nENT ev:a event Rain\n   \n# another\n"
        g = loads_graph(doc)
        assert g.entity_count == 1

    def test_triples_may_precede_entities(self):
        doc = "TRI ev:a causes ev:b\nENT ev:a event Rain\nENT ev:b event Flood\n"
        g = loads_graph(doc)
        assert g.triple_count == 1

    def test_output_is_sorted(self):
        g = KnowledgeGraph()
        g.add_entity(GeoEvent("ev:z", "Rain"))
        g.add_entity(GeoEvent("ev:a", "Flood"))
        g.add_entity(SpatioTemporalRegion("reg:m", Point(0, 0), iv(0, 1)))
        g.assert_triple("ev:z", RelationKind.CAUSES, "ev:a")
        g.assert_triple("ev:a", RelationKind.SPATIO_TEMPORALLY_PRESENT, "reg:m")
        lines = dump_graph(g).splitlines()
        assert lines[1].startswith("ENT ev:a")
        assert lines[2].startswith("ENT ev:z")
        assert lines[3].startswith("REG reg:m")
        assert lines[4].startswith("TRI ev:a")
        assert lines[5].startswith("TRI ev:z")
