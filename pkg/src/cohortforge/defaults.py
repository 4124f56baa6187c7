"""Shipped statistical tables.

Prevalences are fractions.  Factors whose published categories do not cover
the whole population (the four psychiatric-diagnosis factors) carry an explicit
``None`` remainder category so every factor is a proper distribution.
"""

from __future__ import annotations

SCHEMA_VERSION = "1"

FACTOR_GROUPS = (
    "demographic_socioeconomic",
    "medical_biological",
    "lifestyle_environmental",
    "psychosocial_stress",
    "access_to_care",
    "developmental_lifecourse",
)


def _yn(name: str, yes: float) -> tuple[str, tuple[tuple[str, float], ...]]:
    return name, (("Yes", yes), ("No", round(1.0 - yes, 10)))


# (group, [(factor_name, ((label, probability), ...)), ...])
RISK_FACTORS: tuple[tuple[str, tuple], ...] = (
    ("demographic_socioeconomic", (
        ("Age", (("<65", 0.08), ("65–74", 0.22), ("75–84", 0.45), ("≥85", 0.25))),
        ("Gender", (("Male", 0.42), ("Female", 0.56), ("Non-binary/Other", 0.02))),
        ("Race", (
            ("White", 0.58),
            ("Black or African American", 0.22),
            ("Asian", 0.08),
            ("American Indian or Alaska Native", 0.005),
            ("Native Hawaiian or Other Pacific Islander", 0.005),
            ("Mixed/Multiracial", 0.06),
            ("Others/unknown", 0.05),
        )),
        ("Ethnicity", (("Hispanic/Latino", 0.15), ("Non-Hispanic/Latino", 0.80), ("Others/unknown", 0.05))),
        ("Geographic Location", (("Urban", 0.55), ("Suburban", 0.30), ("Rural", 0.15))),
        ("Education Level", (
            ("No formal education", 0.03),
            ("Primary", 0.25),
            ("Secondary", 0.45),
            ("College", 0.20),
            ("Postgraduate", 0.07),
        )),
        ("Financial Status", (("Low income", 0.38), ("Middle income", 0.55), ("High income", 0.07))),
        ("Employment/Occupation", (
            ("Retired", 0.65), ("Manual labor", 0.20), ("Professional", 0.10), ("Unemployed", 0.05),
        )),
        ("Health Insurance", (
            ("None", 0.05), ("Public (e.g., Medicare/Medicaid)", 0.75), ("Private", 0.20),
        )),
        ("Health Literacy", (("Low", 0.35), ("Moderate", 0.50), ("High", 0.15))),
        ("Housing Instability", (
            ("Stable", 0.82), ("Unstable (eviction/foreclosure)", 0.15), ("Homeless", 0.03),
        )),
    )),
    ("medical_biological", (
        _yn("Family History of AD", 0.28),
        _yn("Hypertension", 0.68),
        _yn("Diabetes", 0.34),
        _yn("Cardiovascular Disease", 0.45),
        _yn("Obesity", 0.41),
        _yn("Stroke History", 0.18),
        _yn("Autoimmune Disorders", 0.12),
        _yn("Traumatic Brain Injury (TBI)", 0.09),
        _yn("Epilepsy", 0.04),
        _yn("Chronic Inflammation", 0.27),
        ("Depression Diagnosis", (
            ("Diagnosed", 0.22), ("Undiagnosed", 0.15), ("Untreated", 0.08), ("None", 0.55),
        )),
        ("Anxiety Diagnosis", (
            ("Diagnosed", 0.18), ("Undiagnosed", 0.12), ("Untreated", 0.07), ("None", 0.63),
        )),
        ("Bipolar Disorder Diagnosis", (
            ("Diagnosed", 0.04), ("Undiagnosed", 0.02), ("Untreated", 0.01), ("None", 0.93),
        )),
        ("Schizophrenia Diagnosis", (
            ("Diagnosed", 0.03), ("Undiagnosed", 0.01), ("Untreated", 0.005), ("None", 0.955),
        )),
        _yn("PTSD", 0.11),
        ("Hearing Loss Severity", (("None", 0.45), ("Mild", 0.35), ("Moderate", 0.15), ("Severe", 0.05))),
        ("Vision Loss Severity", (("None", 0.50), ("Mild", 0.30), ("Moderate", 0.15), ("Severe", 0.05))),
        _yn("Chronic Pain", 0.39),
        _yn("Acute Pain", 0.25),
        _yn("Physical Disability", 0.33),
        _yn("Cognitive Disability", 0.28),
    )),
    ("lifestyle_environmental", (
        ("Diet Type", (("Balanced", 0.48), ("Poor (high processed foods)", 0.52))),
        _yn("Substance Abuse (legal/illicit)", 0.17),
        ("Smoking Status", (("Never", 0.45), ("Former", 0.35), ("Current", 0.20))),
        ("Alcohol Use", (("None", 0.40), ("Moderate", 0.50), ("Heavy", 0.10))),
        ("Physical Activity Level", (("Sedentary", 0.55), ("Moderate", 0.35), ("Active", 0.10))),
        ("Sleep Patterns", (("Regular", 0.60), ("Irregular", 0.40))),
        _yn("Air Pollution Exposure", 0.35),
    )),
    ("psychosocial_stress", (
        _yn("Physical Abuse", 0.07),
        _yn("Emotional Abuse", 0.15),
        _yn("Sexual Abuse", 0.04),
        _yn("Combat Exposure", 0.06),
        _yn("Racism/Discrimination", 0.22),
        _yn("Legal Problems", 0.09),
        _yn("Cultural Stigma Around AD", 0.31),
        _yn("Internalized Shame/Guilt", 0.19),
        ("Social Engagement", (
            ("High (regular social interaction)", 0.35), ("Moderate", 0.45), ("Isolated", 0.20),
        )),
        ("Marital Status", (("Single", 0.15), ("Married", 0.50), ("Divorced", 0.25), ("Widowed", 0.10))),
        ("Caregiver Availability", (("Family", 0.65), ("Professional caregiver", 0.25), ("None", 0.10))),
        ("Stress Levels", (("Low", 0.25), ("Moderate", 0.50), ("High", 0.25))),
    )),
    ("access_to_care", (
        ("Proximity to Healthcare", (("Easy access", 0.60), ("Limited access", 0.30), ("Hard", 0.10))),
        ("Public Transport Access", (("Easy access", 0.55), ("Limited access", 0.30), ("No access", 0.15))),
        ("Primary Language", (("English", 0.82), ("Spanish", 0.12), ("Other", 0.06))),
    )),
    ("developmental_lifecourse", (
        _yn("Childhood Trauma", 0.13),
        _yn("Undocumented Immigrant Status", 0.04),
    )),
)

LEXICON_CATEGORIES = (
    "speech_language",
    "memory",
    "learning_perception",
    "assistance_needed",
    "physiological_changes",
    "neuropsychiatric_symptoms",
)

LEXICON: dict[str, tuple[str, ...]] = {
    "speech_language": (
        "communication", "speech", "speaking",
        "word-finding", "word-retrieval", "naming", "encoding", "phonemic",
        "aphasia", "paraphasia", "anomia", "dysnomia",
        "fluency", "perseveration", "repetition",
        "language", "linguistic",
        "comprehend", "understand", "alexia",
    ),
    "memory": (
        "memory", "amnesia", "amnestic",
        "remembering", "recognizing", "recall", "recount", "retain",
        "forget", "lapse",
    ),
    "learning_perception": (
        "attention", "concentration", "focus",
        "learning", "abstraction", "problem-solving",
        "executive function", "cognitive", "neurocognitive", "thinking", "processing",
        "visuospatial", "multidomain", "global", "agnosia",
        "getting lost", "trouble finding", "disoriented", "confusion",
        "Handwriting deterioration",
    ),
    "assistance_needed": (
        "ADLs", "eating", "dressing", "grooming", "toileting", "bathing", "mobility",
        "iADLs", "cooking", "housekeeping", "cleaning", "laundry", "shopping",
        "phone use", "computer use",
        "managing medications", "managing bills", "managing finances",
        "driving", "transportation",
        "medical and legal decision-making",
        "healthcare proxy", "HPOA", "guardian", "guardianship",
        "supervision required",
    ),
    "physiological_changes": (
        "hearing", "auditory", "SNHL", "HoH",
        "vision",
        "smell", "anosmia", "hyposmia",
        "swallowing", "dysphagia",
        "gait", "balance",
        "sleep", "insomnia",
        "pain",
        "incontinence",
    ),
    "neuropsychiatric_symptoms": (
        "mood", "affect", "behavior", "apathy",
        "personality",
        "depressed", "anhedonia",
        "anxiety", "anxious", "agitation", "hypervigilance", "restless", "overwhelmed",
        "insight", "judgment", "impulsive", "anosognosia",
        "anger", "short-tempered", "irritable", "aggressive", "shouting",
        "erratic", "rummaging",
        "wandering",
        "thought disorder",
        "delusion", "hallucination", "paranoia", "psychosis",
    ),
}

# Relative to memory = 1.
CATEGORY_WEIGHTS: dict[str, float] = {
    "speech_language": 2.746,
    "memory": 1.000,
    "learning_perception": 1.733,
    "assistance_needed": 1.531,
    "physiological_changes": 8.766,
    "neuropsychiatric_symptoms": 4.399,
}

# Average keyword mentions per real-world note, by years before diagnosis.
KEYWORDS_PER_NOTE: dict[int, float] = {
    10: 2.745, 9: 2.874, 8: 2.993, 7: 3.101, 6: 3.272,
    5: 3.384, 4: 3.508, 3: 3.678, 2: 3.829, 1: 4.160,
}

DENSITY_MULTIPLIER = 5.0

VISIT_WINDOWS: tuple[tuple[str, int, int], ...] = (
    ("10–7 Years Before", 10, 7),
    ("6–4 Years Before", 6, 4),
    ("3–2 Years Before", 3, 2),
    ("1 Year Before", 1, 1),
)

NOTE_TYPES = (
    "primary_care",
    "neurology",
    "memory_clinic",
    "neuropsychology",
    "geriatrics",
    "psychiatry_mental_health",
    "emergency",
    "hbpc",
)

NOTE_TYPE_DISPLAY = {
    "primary_care": "Primary Care",
    "neurology": "Neurology",
    "memory_clinic": "Memory Clinic",
    "neuropsychology": "Neuropsychology",
    "geriatrics": "Geriatrics",
    "psychiatry_mental_health": "Psychiatry/Mental Health",
    "emergency": "Emergency",
    "hbpc": "Home-Based Primary Care (HBPC)",
}

# Expected notes per patient in each window, columns in VISIT_WINDOWS order.
VISIT_MEANS: dict[str, tuple[float, float, float, float]] = {
    "primary_care": (2.54, 2.59, 2.95, 5.01),
    "neurology": (0.31, 0.74, 1.18, 2.51),
    "memory_clinic": (0.31, 0.74, 1.18, 2.51),
    "neuropsychology": (0.31, 0.74, 1.18, 2.51),
    "geriatrics": (1.02, 0.74, 0.59, 1.67),
    "psychiatry_mental_health": (0.51, 0.74, 0.89, 1.67),
    "emergency": (1.02, 1.11, 1.18, 2.51),
    "hbpc": (0.00, 0.00, 0.59, 1.67),
}

STAGES = (
    "Early prodromal stage",
    "Mild cognitive impairment stage",
    "Mild dementia stage",
    "Moderate dementia stage",
)

STAGE_BY_YEAR: dict[int, str] = {
    10: STAGES[0], 9: STAGES[0], 8: STAGES[0], 7: STAGES[0],
    6: STAGES[1], 5: STAGES[1],
    4: STAGES[2], 3: STAGES[2],
    2: STAGES[3], 1: STAGES[3],
}

GENERATION_PARAMS = {
    "backend": "mock",
    "temperature": 0.7,
    "max_output_tokens": 1500,
    "max_retries": 3,
    "concurrency": 4,
}
