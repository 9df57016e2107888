import random
import re

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bim2brick.brick import (
    B2B, BRICK, RDF_TYPE, RDFS_LABEL, SOURCE_ID, XSD_INTEGER, BrickGraph, Literal,
)
from bim2brick.turtle import TurtleSyntaxError, parse_turtle, serialize_turtle

rdflib = pytest.importorskip("rdflib")

PREFIXES = {"brick": BRICK, "b2b": B2B, "bldg": "urn:bim2brick:T#",
            "rdfs": "http://www.w3.org/2000/01/rdf-schema#",
            "xsd": "http://www.w3.org/2001/XMLSchema#"}


def via_rdflib(text):
    g = rdflib.Graph()
    g.parse(data=text, format="turtle")
    out = set()
    for s, p, o in g:
        assert isinstance(s, rdflib.URIRef) and isinstance(p, rdflib.URIRef)
        if isinstance(o, rdflib.Literal):
            dt = str(o.datatype) if o.datatype is not None else None
            o = Literal(str(o), dt)
        else:
            assert isinstance(o, rdflib.URIRef)
            o = str(o)
        out.add((str(s), str(p), o))
    return frozenset(out)


def small_graph():
    room = "urn:bim2brick:T#Room_101_R1"
    return BrickGraph(PREFIXES, frozenset({
        (room, RDF_TYPE, BRICK + "Room"),
        (room, SOURCE_ID, Literal("R1")),
        (room, RDFS_LABEL, Literal('Room "101"\\east\n')),
        (room, B2B + "count", Literal("7", XSD_INTEGER)),
        (room, B2B + "padded", Literal("007x", XSD_INTEGER)),   # not an integer lexical form
        (room, B2B + "odd", Literal("x", "urn:other:dt")),
        ("urn:bim2brick:T#a.b", BRICK + "hasPart", room),       # not a valid local name
        ("urn:bim2brick:T#z", BRICK + "hasPart", "urn:bim2brick:T#Room_101_R1"),
    }))


def test_empty_graph_is_prefix_block_only():
    text = serialize_turtle(BrickGraph(PREFIXES))
    assert text.splitlines() == [f"@prefix {p}: <{PREFIXES[p]}> ." for p in sorted(PREFIXES)]
    assert parse_turtle(text).triples == frozenset()


def test_one_room_block():
    room = "urn:bim2brick:T#Room_101_R1"
    g = BrickGraph(PREFIXES, frozenset({(room, RDF_TYPE, BRICK + "Room"),
                                        (room, SOURCE_ID, Literal("R1"))}))
    body = serialize_turtle(g).split("\n\n", 1)[1]
    assert body == 'bldg:Room_101_R1 a brick:Room ;\n    b2b:sourceId "R1" .\n'


def test_small_graph_round_trip_and_rdflib_agree():
    g = small_graph()
    text = serialize_turtle(g)
    assert "<urn:bim2brick:T#a.b>" in text and re.search(r"b2b:count 7 [;.]", text)
    assert '"007x"^^xsd:integer' in text and '"x"^^<urn:other:dt>' in text
    assert parse_turtle(text).triples == g.triples == via_rdflib(text)
    assert serialize_turtle(parse_turtle(text)) == text


def test_unwritable_iri_is_refused():
    g = BrickGraph(PREFIXES, frozenset({("urn:bim2brick:T#weird name", RDF_TYPE, BRICK + "Room")}))
    with pytest.raises(ValueError):
        serialize_turtle(g)


@pytest.mark.parametrize("mode", ["people", "bms", "digital-twin"])
def test_fixture_turtle(sde4_runs, mode):
    text = sde4_runs[mode].turtle
    g = parse_turtle(text)
    assert g.triples == sde4_runs[mode].graph.triples
    assert serialize_turtle(g) == text
    assert via_rdflib(text) == g.triples


def test_fixture_subjects_and_prefixes_sorted(sde4_runs):
    text = sde4_runs["digital-twin"].turtle
    prefixes = re.findall(r"^@prefix (\w+):", text, re.M)
    assert prefixes == sorted(prefixes)
    g = parse_turtle(text)
    subjects = [b.split(" ", 1)[0] for b in text.split("\n\n")[1:]]
    assert len(subjects) == len({s for s, _, _ in g.triples})


def perturb(text, rnd):
    """Same triples, different layout: comments, whitespace, PREFIX form, CRLF."""
    out = []
    for line in text.splitlines():
        if line.startswith("@prefix") and rnd.random() < 0.5:
            line = "PREFIX" + line[len("@prefix"):-2]
        if line.startswith("    "):
            line = rnd.choice(["\t", "  ", "        ", " \t "]) + line.lstrip()
        if rnd.random() < 0.3:
            line += rnd.choice(["  # trailing remark", "\t#", " # a \"quoted\" ; , . note"])
        out.append(line)
        if rnd.random() < 0.1:
            out.append("# standalone comment")
        if rnd.random() < 0.1:
            out.append("   \t")
    return "\r\n".join(out) if rnd.random() < 0.3 else "\n".join(out)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32))
def test_perturbations_keep_triples(sde4_runs, seed):
    text = sde4_runs["people"].turtle
    assert parse_turtle(perturb(text, random.Random(seed))).triples == sde4_runs["people"].graph.triples


def test_split_statements_merge():
    text = ("@prefix b: <urn:x#> .\n"
            "b:s b:p b:o1 .\n"
            "b:s b:p b:o2, b:o3 ; b:q \"v\" ; .\n"
            "<urn:x#s> <urn:x#p> <urn:x#o1> .\n")
    g = parse_turtle(text)
    assert g.triples == {("urn:x#s", "urn:x#p", f"urn:x#o{i}") for i in (1, 2, 3)} | {
        ("urn:x#s", "urn:x#q", Literal("v"))}


@pytest.mark.parametrize("text, line, fragment", [
    ('@prefix b: <urn:x#> .\nb:s c:p b:o .\n', 2, "prefix"),
    ('@prefix b: <urn:x#> .\n\nb:s b:p _:n1 .\n', 3, "blank"),
    ('@prefix b: <urn:x#> .\nb:s b:p [ b:q b:o ] .\n', 2, "blank"),
    ('@prefix b: <urn:x#> .\nb:s b:p ( b:o ) .\n', 2, "collection"),
    ('@prefix b: <urn:x#> .\nb:s b:p "x"@en .\n', 2, "language"),
    ('@prefix b: <urn:x#> .\nb:s b:p "open .\n', 2, ""),
    ('@prefix b: <urn:x#> .\nb:s b:p b:o\n', 3, "end of input"),
    ('@prefix b: <urn:x#> .\nb:s b:p 1.5 .\n', 2, ""),
    ('@prefix b: <urn:x#> .\n"lit" b:p b:o .\n', 2, ""),
])
def test_syntax_errors_are_located(text, line, fragment):
    with pytest.raises(TurtleSyntaxError) as info:
        parse_turtle(text)
    assert info.value.line == line
    assert fragment in info.value.reason.lower()


def test_corrupted_fixture_reports_line(sde4_runs):
    lines = sde4_runs["people"].turtle.splitlines()
    k = len(lines) // 2
    while not lines[k].startswith("bldg:"):
        k += 1
    lines[k] = lines[k].replace("bldg:", "nope:", 1)
    with pytest.raises(TurtleSyntaxError) as info:
        parse_turtle("\n".join(lines))
    assert info.value.line == k + 1


text_values = st.text(alphabet=st.characters(blacklist_categories=("Cs",)), max_size=30)


@settings(max_examples=300, deadline=None)
@given(text_values, st.integers(-10**20, 10**20))
def test_literal_escapes_round_trip(label, number):
    g = BrickGraph(PREFIXES, frozenset({
        ("urn:bim2brick:T#n", RDFS_LABEL, Literal(label)),
        ("urn:bim2brick:T#n", B2B + "n", Literal.integer(number)),
    }))
    text = serialize_turtle(g)
    assert parse_turtle(text).triples == g.triples
    assert serialize_turtle(parse_turtle(text)) == text


@settings(max_examples=100, deadline=None)
@given(text_values)
def test_literal_escapes_agree_with_rdflib(label):
    g = BrickGraph(PREFIXES, frozenset({("urn:bim2brick:T#n", RDFS_LABEL, Literal(label))}))
    assert via_rdflib(serialize_turtle(g)) == g.triples


def test_determinism_independent_of_insertion_order(sde4_runs):
    triples = list(sde4_runs["bms"].graph.triples)
    random.Random(1).shuffle(triples)
    g = BrickGraph(dict(reversed(list(sde4_runs["bms"].graph.prefixes.items()))), frozenset(triples))
    assert serialize_turtle(g) == sde4_runs["bms"].turtle
