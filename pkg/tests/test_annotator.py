import pytest
from hypothesis import given
from hypothesis import strategies as st

from cohortforge.annotator import (
    annotate_note,
    annotate_notes,
    parse_annotation_response,
    sentence_id,
    validate_labeled,
)
from cohortforge.errors import PreconditionError, ProtocolError, TransportError, TransientBackendError
from cohortforge.gateway import Gateway, MockBackend
from cohortforge.mock import mock_note
from cohortforge.prompts import build_annotation_prompt, prompt_sentences
from cohortforge.records import LabeledSentence, SyntheticNote
from cohortforge.taxonomy import CATEGORY_NAMES, AnnotationCategory, annotation_guideline, primary_label

GUIDE = annotation_guideline()
DAUGHTER = "Daughter reports that she repeatedly asks the same question."


def note(text, note_id="SYN-0000001-N001", patient="SYN-0000001", year=3):
    return SyntheticNote(note_id, patient, year, "neurology", "Mild dementia stage", "sha256:x", "mock-v1", text)


def labels_by_text(annotation):
    return {r.sentence_text: set(r.labels) for r in annotation}


@pytest.fixture
def gateway():
    return Gateway(MockBackend(), sleep=lambda s: None)


def test_guideline_examples(gateway):
    text = f"Subjective:\nMemory loss. {DAUGHTER}\n\nObjective:\nVital signs stable.\n"
    result = annotate_note(note(text), gateway, GUIDE)
    got = labels_by_text(result)
    assert got["Memory loss."] == {"cognitive_impairment"}
    assert "concern_by_others" in got[DAUGHTER]
    assert got["Vital signs stable."] == set()
    assert not result.errors


def test_one_record_per_sentence_with_ids(gateway):
    text = "Plan:\n- Start donepezil.\n- Gait training.\n- Follow up.\n"
    result = annotate_note(note(text), gateway, GUIDE)
    assert [r.sentence_id for r in result] == [sentence_id("SYN-0000001-N001", k) for k in (1, 2, 3)]
    assert all(r.patient_id == "SYN-0000001" and r.year_before_dx == 3 for r in result)
    assert result[1].labels == ("physiological_changes",)


def test_multi_label_kept(gateway):
    result = annotate_note(note("Wife reports apathy and memory loss.\n"), gateway, GUIDE)
    assert set(result[0].labels) == {"cognitive_impairment", "concern_by_others", "neuropsychiatric_symptoms"}
    assert primary_label(result[0].labels) is AnnotationCategory.CONCERN_BY_OTHERS


def test_empty_note_rejected(gateway):
    with pytest.raises(PreconditionError):
        annotate_note(note("  "), gateway, GUIDE)


class ScriptedAnnotator:
    """Returns queued responses; records every prompt it sees."""

    backend_id = "scripted"

    def __init__(self, *responses):
        self.responses = list(responses)
        self.prompts = []

    def complete(self, request):
        self.prompts.append(request.bundle.user_text)
        return self.responses.pop(0)


TWO = "Memory loss. Vital signs stable.\n"


def test_repair_fixes_bad_line():
    backend = ScriptedAnnotator("0: cognitive_impairment\n1: diagnostic_test\n", "1: none\n")
    result = annotate_note(note(TWO), Gateway(backend), GUIDE)
    assert [r.labels for r in result] == [("cognitive_impairment",), ()]
    assert not result.errors
    assert "## Correction" in backend.prompts[1] and "sentence(s) 1" in backend.prompts[1]


def test_unrepaired_sentence_surfaces_as_error():
    backend = ScriptedAnnotator("0: cognitive_impairment\n", "I am not sure.\n")
    result = annotate_note(note(TWO), Gateway(backend), GUIDE)
    assert len(result) == 1 and result[0].sentence_text == "Memory loss."
    assert [(e.sentence_id, e.reason) for e in result.errors] == [("SYN-0000001-N001-S002", "no answer")]


def test_out_of_range_index_is_protocol_error():
    backend = ScriptedAnnotator("0: none\n1: none\n7: cognitive_impairment\n")
    with pytest.raises(ProtocolError):
        annotate_note(note(TWO), Gateway(backend), GUIDE)


def test_gateway_failure_propagates():
    class Down:
        backend_id = "down"

        def complete(self, request):
            raise TransientBackendError("503")

    with pytest.raises(TransportError):
        annotate_note(note(TWO), Gateway(Down(), max_retries=1, sleep=lambda s: None), GUIDE)


def test_annotation_uses_zero_temperature():
    seen = []

    class Spy(MockBackend):
        def complete(self, request):
            seen.append(request.temperature)
            return super().complete(request)

    annotate_note(note(TWO), Gateway(Spy()), GUIDE)
    assert seen == [0.0]


def test_batch_matches_single(gateway):
    notes = [note(f"Memory loss. Gait slow. Item {i}.\n", note_id=f"SYN-0000001-N{i:03d}") for i in range(1, 12)]
    single = [annotate_note(n, gateway, GUIDE) for n in notes]
    assert annotate_notes(notes, gateway, GUIDE, concurrency_limit=4) == single


def test_batch_repair_round():
    class Flaky(MockBackend):
        def complete(self, request):
            text = super().complete(request)
            if "## Correction" not in request.bundle.user_text and "Item 2." in request.bundle.user_text:
                return "0: banana\n"
            return text

    notes = [note(f"Memory loss. Item {i}.\n", note_id=f"N{i}") for i in (1, 2)]
    out = annotate_notes(notes, Gateway(Flaky()), GUIDE)
    assert [len(a) for a in out] == [2, 2] and not any(a.errors for a in out)


# -- response parsing ------------------------------------------------------

def test_parse_tolerates_noise_and_case():
    answers, problems = parse_annotation_response(
        "Here you go:\n0: Cognitive_Impairment, concern_by_others\n1) none\n", 2
    )
    assert answers == {
        0: (AnnotationCategory.COGNITIVE_IMPAIRMENT, AnnotationCategory.CONCERN_BY_OTHERS), 1: ()
    }
    assert problems == {}


def test_parse_conflict_and_missing():
    answers, problems = parse_annotation_response("0: none\n0: cognitive_impairment\n", 2)
    assert answers == {}
    assert problems == {0: "conflicting answers", 1: "no answer"}


def test_parse_repeated_identical_answer_is_fine():
    answers, problems = parse_annotation_response("0: none\n0: none\n", 1)
    assert answers == {0: ()} and problems == {}


@given(st.lists(st.sets(st.sampled_from(CATEGORY_NAMES)), min_size=1, max_size=20))
def test_parse_round_trip(label_sets):
    text = "\n".join(f"{i}: {', '.join(sorted(s)) or 'none'}" for i, s in enumerate(label_sets))
    answers, problems = parse_annotation_response(text, len(label_sets))
    assert not problems
    assert [{c.value for c in answers[i]} for i in range(len(label_sets))] == label_sets


# -- validation ------------------------------------------------------------

def rec(sid="N1-S001", note_id="N1", patient="P1", text="Memory loss.", labels=("cognitive_impairment",), year=2):
    return LabeledSentence(sid, note_id, patient, year, text, tuple(labels))


def test_well_formed_batch():
    report = validate_labeled([rec(), rec("N1-S002", labels=())], notes={"N1": "P1"})
    assert report.ok and report.n_records == 2


def test_excluded_category_is_closed_set_violation():
    report = validate_labeled([rec(labels=("diagnostic_test",))])
    assert [v.kind for v in report.violations] == ["closed_set"]
    assert report.violations[0].index == 0 and report.violations[0].sentence_id == "N1-S001"


def test_dangling_note_id():
    report = validate_labeled([rec(sid="N9-S001", note_id="N9")], notes={"N1": "P1"})
    assert [v.kind for v in report.violations] == ["reference"]


def test_note_objects_accepted_for_references():
    report = validate_labeled([rec(sid="SYN-0000001-N001-S001", note_id="SYN-0000001-N001", patient="P2")],
                              notes=[note("x")])
    assert [v.kind for v in report.violations] == ["reference"]


@pytest.mark.parametrize("bad, kind", [
    (rec(text="   "), "empty_text"),
    (rec(year=11), "year"),
    (rec(sid="N2-S001"), "reference"),
    (rec(labels=("cognitive_impairment", "cognitive_impairment")), "closed_set"),
])
def test_single_violation_kinds(bad, kind):
    assert [v.kind for v in validate_labeled([bad]).violations] == [kind]


def test_duplicate_ids():
    report = validate_labeled([rec(), rec()])
    assert [(v.index, v.kind) for v in report.violations] == [(1, "duplicate_id")]


def test_patient_conflict_within_note():
    report = validate_labeled([rec(), rec("N1-S002", patient="P2")])
    assert [v.kind for v in report.violations] == ["reference"]


def test_raw_dicts_and_schema_errors():
    good = rec().to_record()
    broken = dict(good, sentence_id="N1-S002", labels="cognitive_impairment")
    report = validate_labeled([good, broken, {"sentence_id": "x"}])
    assert [v.kind for v in report.violations] == ["schema", "schema"]
    assert report.to_dict()["ok"] is False


def test_mock_annotations_always_validate(gateway, cfg):
    text = mock_note([kw for words in cfg.lexicon.keywords.values() for kw in words[:3]])
    n = note(text)
    result = annotate_note(n, gateway, GUIDE)
    assert validate_labeled(result.records, notes=[n]).ok
    assert len(result) == len(prompt_sentences(build_annotation_prompt(text, GUIDE)))
