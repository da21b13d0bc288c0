import io
import json

import pytest

from nlifoundry.errors import ParseError, TruncationError
from nlifoundry.ingest import (
    Article,
    RawPage,
    filter_pages,
    parse_dump,
    split_sentences,
    strip_markup,
)
from nlifoundry.ingest.sentences import split_text
from nlifoundry.ingest.wikitext import page_to_article

XML_ONE_PAGE = b"""<mediawiki xmlns="http://www.mediawiki.org/xml/export-0.10/">
<siteinfo><sitename>W</sitename></siteinfo>
<page><title>A</title><ns>0</ns><id>1</id>
<revision><id>5</id><text>Ceva text.</text></revision></page>
</mediawiki>"""


class TestParseDump:
    def test_single_page_xml(self):
        pages = list(parse_dump(io.BytesIO(XML_ONE_PAGE)))
        assert len(pages) == 1
        assert pages[0].title == "A"
        assert pages[0].namespace == 0
        assert pages[0].page_id == 1
        assert pages[0].wikitext == "Ceva text."

    def test_jsonl_passthrough_no_filtering(self):
        line = b'{"id":7,"title":"B","namespace":4,"text":""}\n'
        pages = list(parse_dump(io.BytesIO(line)))
        assert pages == [RawPage(page_id=7, title="B", namespace=4, wikitext="")]

    def test_truncated_xml_yields_no_partial_page(self):
        cut = XML_ONE_PAGE[: XML_ONE_PAGE.find(b"</revision>")]
        pages = []
        with pytest.raises(TruncationError):
            for page in parse_dump(io.BytesIO(cut)):
                pages.append(page)
        assert pages == []

    def test_truncated_jsonl(self):
        data = b'{"id":1,"title":"A","namespace":0,"text":""}\n{"id":2,"titl'
        with pytest.raises(TruncationError):
            list(parse_dump(io.BytesIO(data)))

    def test_malformed_xml_names_offset(self):
        bad = b"<pages><page></pages>"
        with pytest.raises(ParseError) as info:
            list(parse_dump(io.BytesIO(bad)))
        assert info.value.byte_offset is not None

    def test_malformed_jsonl_line_names_offset(self):
        data = b'{"id":1,"title":"A","namespace":0,"text":""}\nnot-json\n'
        with pytest.raises(ParseError) as info:
            list(parse_dump(io.BytesIO(data)))
        assert not isinstance(info.value, TruncationError)
        assert info.value.byte_offset >= 45

    def test_empty_stream(self):
        assert list(parse_dump(io.BytesIO(b""))) == []

    def test_streaming_bounded_readahead(self):
        """Pulling a few pages must not consume the whole 10k-page dump."""

        class CountingReader(io.RawIOBase):
            def __init__(self, data: bytes):
                self.data = data
                self.pos = 0

            def read(self, size=-1):
                if size < 0:
                    size = len(self.data) - self.pos
                chunk = self.data[self.pos : self.pos + size]
                self.pos += len(chunk)
                return chunk

        body = b"".join(
            b"<page><title>P%d</title><ns>0</ns><id>%d</id>"
            b"<revision><text>%s</text></revision></page>\n"
            % (i, i, b"text " * 250)
            for i in range(10_000)
        )
        dump = b"<mediawiki>\n" + body + b"</mediawiki>"
        reader = CountingReader(dump)
        stream = parse_dump(reader)
        for _ in range(10):
            next(stream)
        # bounded by a couple of read chunks, far below the dump size
        assert reader.pos < len(dump) / 50
        assert reader.pos <= 3 * 64 * 1024

    def test_full_10k_dump_round_trip(self):
        records = "\n".join(
            json.dumps({"id": i, "title": f"P{i}", "namespace": 0, "text": "x"})
            for i in range(10_000)
        )
        pages = list(parse_dump(io.BytesIO(records.encode())))
        assert len(pages) == 10_000
        assert [p.page_id for p in pages] == list(range(10_000))


class TestFilterPages:
    def test_ordinary_main_namespace_kept(self):
        page = RawPage(1, "Orice", 0, "Text normal.")
        assert filter_pages(page) is page

    def test_talk_namespace_dropped(self):
        counters = {}
        assert filter_pages(RawPage(1, "Discuție:X", 1, ""), counters) is None
        assert counters == {"namespace": 1}

    def test_disambiguation_suffix_dropped(self):
        counters = {}
        page = RawPage(2, "Arad (dezambiguizare)", 0, "Lista.")
        assert filter_pages(page, counters) is None
        assert counters == {"disambiguation": 1}

    def test_disambiguation_template_dropped(self):
        counters = {}
        page = RawPage(3, "Arad", 0, "{{dezambiguizare}}\nLista.")
        assert filter_pages(page, counters) is None
        assert counters == {"disambiguation": 1}

    def test_redirect_dropped(self):
        counters = {}
        page = RawPage(4, "Alt nume", 0, "#REDIRECT [[Nume]]")
        assert filter_pages(page, counters) is None
        assert counters == {"redirect": 1}

    def test_drop_reasons_partition(self):
        """Each dropped page gets exactly one reason."""
        counters = {}
        pages = [
            RawPage(1, "Discuție:X (dezambiguizare)", 1, "#REDIRECT [[Y]]"),
            RawPage(2, "B (dezambiguizare)", 0, "#REDIRECT [[Y]]"),
            RawPage(3, "C", 0, "#redirecteaza [[Y]]"),
            RawPage(4, "D", 0, "text"),
        ]
        kept = [p for p in pages if filter_pages(p, counters)]
        assert [p.page_id for p in kept] == [4]
        assert sum(counters.values()) == 3
        assert counters == {"namespace": 1, "disambiguation": 1, "redirect": 1}


class TestStripMarkup:
    def test_heading_becomes_section_path(self):
        assert strip_markup("== Istorie ==\nText.") == [("Istorie", "Text.")]

    def test_refs_removed(self):
        assert strip_markup("A<ref>src</ref> B.") == [("", "A B.")]
        assert strip_markup('A<ref name="x"/> B.') == [("", "A B.")]

    def test_link_display_text(self):
        assert strip_markup("[[Roma|cetatea Roma]] e mare") == [
            ("", "cetatea Roma e mare")
        ]
        assert strip_markup("[[Roma]] e mare") == [("", "Roma e mare")]

    def test_templates_and_tables_removed(self):
        text = "{{Infobox|a={{x}}}}Rămâne. {| tabel |- rând |} Si asta."
        assert strip_markup(text) == [("", "Rămâne. Si asta.")]

    def test_file_links_removed_with_nested_brackets(self):
        text = "[[Fișier:Poza.jpg|thumb|legenda cu [[link|text]]]]Doar asta."
        assert strip_markup(text) == [("", "Doar asta.")]

    def test_external_links_keep_display(self):
        text = "Vezi [http://example.com sursa oficială] aici."
        assert strip_markup(text) == [("", "Vezi sursa oficială aici.")]

    def test_reference_sections_dropped_entirely(self):
        text = (
            "Introducere.\n== Istorie ==\nFapte.\n== Note ==\n<nowiki/>lista\n"
            "== Legături externe ==\nlinkuri\n== Altele ==\nHm."
        )
        assert strip_markup(text) == [
            ("", "Introducere."),
            ("Istorie", "Fapte."),
            ("Altele", "Hm."),
        ]

    def test_subsection_paths(self):
        text = "== Top ==\nA.\n=== Sub ===\nB.\n== Alt ==\nC."
        assert strip_markup(text) == [("Top", "A."), ("Top/Sub", "B."), ("Alt", "C.")]

    def test_unbalanced_markup_recovers_and_counts(self):
        counters = {}
        sections = strip_markup("A {{neînchis text.", counters)
        assert sections  # never raises, text survives
        assert counters.get("unbalanced_template") == 1


class TestSplitSentences:
    def test_length_filter(self):
        long_sentence = "Aceasta este o propoziție destul de lungă pentru filtru"
        long_sentence += "!" * (60 - len(long_sentence))
        short_sentence = "Prea scurtă ca să treacă de filtru"
        short_sentence += "!" * (49 - len(short_sentence))
        assert (len(long_sentence), len(short_sentence)) == (60, 49)
        article = Article(1, "T", (("", f"{long_sentence} {short_sentence}"),))
        kept = split_sentences(article, min_len=50)
        assert [s.text for s in kept] == [long_sentence]

    def test_abbreviation_blocks_split(self):
        text = "Str. Aviatorilor este lungă și se întinde pe mai multe cartiere."
        article = Article(1, "T", (("", text),))
        assert [s.text for s in split_sentences(article)] == [text]

    def test_empty_section(self):
        article = Article(1, "T", ())
        assert split_sentences(article) == []

    def test_indices_strictly_increasing_with_gaps_for_dropped(self):
        body = (
            "Prima propoziție este suficient de lungă pentru acest filtru. Scurt. "
            "A treia propoziție este de asemenea destul de lungă încât rămâne."
        )
        article = Article(1, "T", (("", body),))
        indices = [s.index_in_section for s in split_sentences(article)]
        assert indices == [0, 2]

    def test_every_sentence_meets_min_len(self):
        page = RawPage(9, "T", 0, "== A ==\n" + "Ana are mere. " * 30)
        article = page_to_article(page)
        for sentence in split_sentences(article, min_len=20):
            assert sentence.char_len >= 20
            assert sentence.char_len == len(sentence.text)

    def test_split_text_boundaries(self):
        assert split_text("Una aici. A doua! A treia?") == [
            "Una aici.", "A doua!", "A treia?"
        ]
        assert split_text("Anul 3.5 este") == ["Anul 3.5 este"]
        assert split_text("I. L. Caragiale a scris. Apoi a plecat.") == [
            "I. L. Caragiale a scris.", "Apoi a plecat."
        ]
