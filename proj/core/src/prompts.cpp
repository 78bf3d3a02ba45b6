#include "engram/prompts.hpp"

#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace engram {

namespace {

const char* kExtraction = R"PROMPT(You are an information extraction engine.
Your job is to extract the maximally fine-grained set of atomic, queryable memory units from conversation fragments.

Return ONLY valid JSON. No markdown. No explanations.

Definition:
- A memory unit is the smallest self-contained piece of information that could answer a future query.
- Memory units include events, facts, plans, preferences, relationships, statuses, goals, challenges, collections/items, and named-entity attributes.
- Each unit must be grounded in the provided fragments via frag_ids.
- Do NOT write narrative summaries or high-level commentary.

Granularity rules:
- Split aggressively: prefer many small units over fewer large ones.
- One unit = one claim.
- If a sentence lists multiple items, create one unit per item.
- If a statement contains multiple attributes, create separate units for each attribute.
- Keep units independently queryable.

Hard requirements:
Output JSON with the exact top-level key: "events".
Each memory unit must include:
- "event_text": a single canonical sentence describing one claim.
- "frag_ids": list of supporting fragment ids.
- "time_range": [start_ts, end_ts] as unix timestamps in seconds.
- "event_type": one of ["episodic","plan","preference","fact","relationship","status","procedure","other"].

Additional rules:
- Preserve named entities, numbers, dates, locations, and constraints.
- Do not invent unsupported details.
- Resolve vague references when the referent is clear from nearby fragments.
- Deduplicate only if two units express the same claim with the same specificity.
- Include short-lived chatter only if it creates a queryable unit.

Cross-fragment change and linkage:
- Consider how fragments change or relate to earlier fragments.
- If a meaningful change is detected, extract an additional unit describing the change.
- Change types include plans, preferences, goals, status, roles, locations, and availability.
- If a later fragment answers, corrects, or refers to an earlier fragment, extract a linkage unit if it is queryable.
- Delta units should use templates such as:
  "Previously <X>; now <Y>." or "Earlier <X>; later <Y>."

Optional fields:
- participants
- location
- confidence
- notes

If no meaningful units can be extracted, return:
{"events": []}
)PROMPT";

const char* kConsolidation = R"PROMPT(You are a long-term memory consolidation engine.
Your job is to consolidate lower-level memory units into stable, long-term consolidated events.

Return ONLY valid JSON. No markdown. No explanations.

Key idea:
Consolidation is not summarization.
It converts repeated, stable, or high-signal units into canonical long-term memories.
Do NOT force coverage; many lower-level units may remain unmerged.

Hard constraints:
- Output JSON with top-level keys: "consolidated_events" and "unmerged_event_ids".
- Only output a consolidated event if it is supported by at least two distinct source events.
- Each consolidated event must have source_event_ids length >= 2.
- Do NOT invent facts. Preserve names, numbers, dates, and constraints.
- Each consolidated event should represent one stable memory.
- If the evidence evolves, record the stable core and evolution notes.
- If the evidence conflicts, record the conflict rather than choosing one side.

Merge rules:
- Only merge units that share the same subject/entity and the same relation or attribute.
- Prefer type-homogeneous merges.
- For itemized lists, consolidate into a collection memory only when all items share the same relation.
- Do not over-generalize beyond the evidence.
- If clusters are provided, merge only within the same cluster.

Output schema:
{
  "consolidated_events": [
    {
      "consolidated_text": "string",
      "memory_kind": "stable_fact|preference|ongoing_plan|relationship|recurring_theme|status|other",
      "time_range": [number, number],
      "participants": ["string", ...],
      "entity_hints": ["string", ...],
      "source_event_ids": ["string", ...],
      "stability": "stable|evolving|conflicting",
      "invariants": ["string", ...],
      "evolution": ["string", ...],
      "conflicts": [
        {
          "claim_a": "...",
          "claim_b": "...",
          "source_event_ids_a": [...],
          "source_event_ids_b": [...]
        }
      ],
      "confidence": number
    }
  ],
  "unmerged_event_ids": ["string", ...]
}
)PROMPT";

const char* kEntityExtraction = R"PROMPT(You are an entity and relation extraction engine.
Extract the entities and the relations between them from one conversation fragment.

Return ONLY valid JSON. No markdown. No explanations.

Rules:
- Each entity has: "name" (surface form), "type" (one of ["person","organization","location","event","product","work","date","time","other"]), optional "span", optional "role", optional "salience" (0..1).
- Each relation has: "source" (entity surface name), "target" (entity surface name), "label" (short verb or noun phrase), "confidence" (0..1), optional "span".
- Relation endpoints must be names from the extracted entity list.
- Do not invent entities that are not grounded in the fragment text.

Output schema:
{"entities": [{"name": "...", "type": "..."}], "relations": [{"source": "...", "target": "...", "label": "...", "confidence": 0.5}]}
)PROMPT";

const char* kJudge = R"PROMPT(Your task is to label an answer to a question as "CORRECT" or "WRONG".
You will be given:
(1) a question,
(2) a gold answer,
(3) a generated answer.

The question asks about something one user should know about another user based on prior conversations.
The gold answer is usually concise.
The generated answer may be longer, but should be counted as CORRECT if it refers to the same fact or topic as the gold answer.

For time-related questions, consider different surface forms of the same date or time period as CORRECT.
For example, "May 7th" and "7 May" should be considered equivalent if they refer to the same date.

Question: {question}
Gold answer: {gold_answer}
Generated answer: {generated_answer}

Return ONLY valid JSON:
{"label": "CORRECT"} or {"label": "WRONG"}.
)PROMPT";

const char* kSimplifier = R"PROMPT(You are an answer simplifier.
You will be given a question and a generated answer.
Extract only the minimal core fact that directly answers the question.

Rules:
- Do NOT add explanations or extra context.
- Preserve names, numbers, dates, and units when they are part of the answer.
- If the generated answer contains multiple facts, keep only the fact required by the question.
- Output MUST be valid JSON only.

JSON schema:
{"answer": <string>}

Question: {question}
Generated Answer: {answer}
)PROMPT";

const char* kPlanner = R"PROMPT(You are to decompose the user's query into atomic subqueries and their dependencies.
Your goal is to produce subqueries that are SMALLER, MORE CONSTRAINED, and SEMANTICALLY SINGLE-PURPOSE than the original query, never broader.

You must think silently and output ONLY ONE JSON object.
No chain-of-thought, no analysis, no <think>, no markdown, no code fences.

JSON schema:
- "subqueries": a list of objects each with:
    - "id": "q1","q2",...
    - "text": string (the atomic subquery)
    - "memory_scope": one of ["SHORT","LONG","MIXED"]
    - "coverage_mode": one of ["local","global"]
    - "type_hint": optional short string hint for unit type (e.g., "intention","procedural","preference","episodic","semantic"); may be null
    - "deps": list of subquery ids this subquery depends on (may be empty)
    - "hint_time": null or [start_timestamp, end_timestamp] in seconds if time-constrained
- "dependency_graph": object mapping subquery id -> list of dependency subquery ids (prerequisites).

CRITICAL PRINCIPLE (DO NOT VIOLATE):
- Each subquery must preserve ALL explicit constraints from the user query that are relevant to answering it.
- NEVER drop or weaken constraints such as:
  - time windows / dates / relative-time anchors
  - named entities / subjects / objects
  - locations
  - quantities / counts
  - qualifiers like "major", "first", "most recent", "in that meeting", "during that trip", etc.
- If a constraint exists in the user query, it MUST appear in the subquery text OR be represented as hint_time when appropriate.
- Subqueries must not broaden the search space. They should reduce it.

TIME WINDOW RULES:
- If the query includes a clear absolute time (e.g., a month/year/date), keep it in the subquery text.

DECOMPOSITION RULES:
- Prefer 1-5 subqueries. If the user query is already atomic and well-scoped, output exactly 1 subquery that restates it faithfully (do NOT split).
- HARD RULE: If you output EXACTLY 1 subquery, its "text" MUST be EXACTLY IDENTICAL to the full original user query (verbatim). Do NOT paraphrase, shorten, translate, or reformat.
- Decompose only when it reduces difficulty by isolating distinct required pieces (e.g., identify entity, then retrieve evidence, then synthesize).
- When decomposing, subqueries should become more specific via:
  - separating different targets (different people/items/events) into separate subqueries, while preserving the original constraints for each target
  - separating different time windows or temporal anchors into separate subqueries, especially when one date/time/event must be used as the reference point for another step
  - separating anchor resolution from calculation/comparison/synthesis: first retrieve the date/entity/event that acts as the anchor, then use it in dependent subqueries
- NEVER create a subquery that is a strict superset of another subquery's scope unless it is explicitly needed for global coverage questions.

ATOMICITY & SEMANTIC PURITY (VERY IMPORTANT):
- EACH subquery must represent exactly ONE information need / ONE intent / ONE semantic predicate.
- A subquery must be answerable by ONE short response (or one focused list) without needing to address a second, separate question.
- DO NOT combine multiple asks in one subquery. Avoid conjunction-style bundling such as:
    - "and", "or", "as well as", "also", "+"
- If the user query contains multiple intents, split them into multiple subqueries.
- If a question contains "what" + "why" + "how" (or similar), split:
    - e.g., (1) what happened? (2) why did it happen? (deps=[(1)]) (3) how was it decided? (deps=[(1)])
- If the query asks for comparison or trade-off (A vs B), prefer:
    - one subquery to retrieve evidence about A,
    - one subquery to retrieve evidence about B,
    - optional synthesis subquery "Compare A vs B based on evidence" with deps on both.
- If you find yourself writing a long subquery with multiple clauses, split it.

DEPENDENCIES:
- Use deps only for true prerequisites (e.g., resolve an ambiguous referent before retrieving evidence).
- Do NOT produce circular dependencies: ensure the dependency_graph is acyclic.

COVERAGE MODE (local vs global):
- Keep coverage_mode="local" for single-incident, single-moment questions that can be answered from a small number of best-matching snippets.
- Use coverage_mode="global" whenever answering requires combining evidence from MULTIPLE turns.
    This includes aggregation intents even if the user does NOT explicitly say "all"/"so far".
    MUST set coverage_mode="global" for any counting/aggregation intent, e.g.:
        - "count ...", "how many ...", "number of ...", "total ...", "times ...", "frequency ...", "rate ..."
    Also set coverage_mode="global" for set-collection intents, e.g.:
        - "list ...", "names of ..."

MEMORY SCOPE:
- SHORT: use for episodic or situational dialogue evidence tied to a specific moment, date, meeting, action, decision, or temporary context.
  Examples: "meeting is tomorrow at 3pm", "the user bought a tennis racket yesterday", "focus on page 4 of the uploaded file".

- LONG: use for stable, reusable, or profile-like memory that remains useful beyond the original dialogue moment.
  such as enduring preferences, personal background, identity, education, occupation, relationships, hobbies, long-term goals, persistent statuses, and general procedures.
  Examples: "the user prefers concise answers", "the user graduated with a degree in Business Administration", "the user's favorite running shoe brand is Nike".

- MIXED: use when answering the query requires both LONG-style stable memory and SHORT-style situational evidence.
  Example: "the user generally prefers concise writing, but this specific email to the CEO should be more formal".
OUTPUT MUST be valid JSON following the schema above. Do NOT include any explanation, analysis, or markdown.

User query:
{QUERY_TEXT}
)PROMPT";

const char* kMissingInfo = R"PROMPT(Return EXACTLY ONE compact single-line JSON object.
No chain-of-thought, no analysis, no <think>, no markdown, and no code fences.
Required key: missing_info_query.

You are generating ONE actionable retrieval query to fill the missing slot(s) AFTER a reasoner has already produced a preliminary answer.

Input is a JSON object with keys:
query (string),
subquery (string), and
reason_output (object with keys conclusions, confidence, and missing_info).

Missing-info policy:
missing_info MUST be true whenever the available evidence cannot answer the subquery as asked with the required specificity.
This includes, but is not limited to:
(a) the question asks for a specific value, but the evidence only provides a vague reference;
(b) the answer requires resolving an ungrounded pronoun or placeholder;
(c) there are multiple plausible candidates.

Anti-echo rule:
The missing-information query MUST NOT be a paraphrase or rewrite of the subquery.
It must ask for a missing slot explicitly suggested by the evidence but not specified.
It must include at least one concrete anchor from the evidence, such as a named entity, object, or time phrase.
If the subquery asks for X but the evidence only mentions Y, ask about Y first as a bridge step.
The query should be minimal and ordered by dependency.

Example:
Subquery: Which airline did John fly to Tokyo?
Evidence: John said, "I took a red-eye to Tokyo last night."
Good: {"missing_info_query":"Which airline operated the red-eye flight John took?"}
Bad: {"missing_info_query":"Which specific airline did John fly to Tokyo?"}

Output JSON only.
)PROMPT";

const char* kReasoner = R"PROMPT(You are an evidence-grounded reasoner.
Answer one subquery using ONLY the evidence items and prerequisite answers provided.

Return ONLY valid JSON. No markdown. No explanations.

Rules:
- Base the answer strictly on the evidence; do not invent facts.
- Set "missing_info" to true whenever the evidence cannot answer the subquery
  as asked with the required specificity (vague references, ungrounded
  pronouns, or multiple plausible candidates all count as missing).
- When missing_info is true, still report the best-supported partial
  conclusions in "answer".

Output schema:
{"answer": "string", "missing_info": true|false}
)PROMPT";

const char* kSynthesizer = R"PROMPT(You are an answer synthesizer.
Combine the sub-answers into one final answer to the original query.

Return ONLY valid JSON. No markdown. No explanations.

Rules:
- Respect every sub-answer; when sub-answers intersect, report the common fact.
- If no sub-answer contains usable evidence, answer exactly "Insufficient memory evidence."
- Keep the final answer short and directly responsive to the query.

Output schema:
{"answer": "string"}
)PROMPT";

}  // namespace

const PromptCatalog& PromptCatalog::builtin() {
    static const PromptCatalog catalog = [] {
        PromptCatalog c;
        c.extraction = kExtraction;
        c.consolidation = kConsolidation;
        c.entity_extraction = kEntityExtraction;
        c.judge = kJudge;
        c.simplifier = kSimplifier;
        c.planner = kPlanner;
        c.missing_info = kMissingInfo;
        c.reasoner = kReasoner;
        c.synthesizer = kSynthesizer;
        return c;
    }();
    return catalog;
}

PromptCatalog PromptCatalog::load_with_overrides(const std::string& path) {
    PromptCatalog c = builtin();
    if (path.empty()) return c;
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open prompt catalog: " + path);
    nlohmann::json j = nlohmann::json::parse(in);
    auto maybe = [&j](const char* key, std::string& slot) {
        if (j.contains(key)) slot = j.at(key).get<std::string>();
    };
    maybe("extraction", c.extraction);
    maybe("consolidation", c.consolidation);
    maybe("entity_extraction", c.entity_extraction);
    maybe("judge", c.judge);
    maybe("simplifier", c.simplifier);
    maybe("planner", c.planner);
    maybe("missing_info", c.missing_info);
    maybe("reasoner", c.reasoner);
    maybe("synthesizer", c.synthesizer);
    return c;
}

std::string substitute_slots(std::string_view tmpl, const std::map<std::string, std::string>& slots) {
    std::string out(tmpl);
    for (const auto& [key, value] : slots) {
        const std::string marker = "{" + key + "}";
        std::size_t pos = 0;
        while ((pos = out.find(marker, pos)) != std::string::npos) {
            out.replace(pos, marker.size(), value);
            pos += value.size();
        }
    }
    return out;
}

}  // namespace engram
