"""Regenerates the golden scripted transcripts from the files in this directory."""
import json
import pathlib

HERE = pathlib.Path(__file__).parent
INDUCE = "Now, employ the following reasoning framework"


def goals(reasoning, items):
    return json.dumps({"reasoning": reasoning,
                       "goals": [{"name": n, "description": d, "weight": w} for n, d, w in items]}, indent=2)


def background(name, text):
    return {"match": r"^Find recent information[\s\S]*ENTITY NAME: " + name + "\n", "regex": True, "repeat": True,
            "response": text}


def relevance(name, value):
    return {"match": "I have the following COMPONENT:\nName: " + name + "\n", "repeat": True, "response": value}


def write(name, entries):
    with open(HERE / name, "w") as f:
        json.dump({"mode": "matched", "entries": entries}, f, indent=2, ensure_ascii=False)
        f.write("\n")


# Expertise run on the Overleaf System section.
experts = {
    "Technical Writing Specialist": (
        "Helps structure technical sections so each component is motivated before it is described.",
        ["Works on documentation style guides for research software and teaches a graduate course on writing about systems.",
         "Known for the advice to introduce each component by the question it answers before naming it."],
        "0.92",
        "The section lists modules in order but never says what problem each one solves. Open each subsection with the "
        "user-facing question it answers.\n\nThe Induction subsection states that three goals are returned; say how the "
        "weights are meant to be read."),
    "Systems Architecture Expert": (
        "Reviews component boundaries, data flow and interfaces in system designs.",
        ["Designs service architectures for model-backed applications and has written on interface contracts between "
         "pipeline stages.",
         "Often asks how a design would integrate with systems outside the diagram."],
        "0.81",
        "The internal interfaces between capture, induction and steering are clearly separated.\n\nIt is less clear how an "
        "external application would feed snapshots into this architecture or consume its outputs."),
    "Human-AI Interaction Researcher": (
        "Evaluates how users perceive, trust and correct inferred goals in interactive systems.",
        ["Studies how people review and correct automatic inferences in intelligent interfaces.",
         "Has published on the cognitive cost of checking machine-generated suggestions.",
         "Frequently recommends reporting the exact measures behind accuracy and usefulness claims."],
        "0.88",
        "The evaluation paragraph mentions accuracy and usefulness but not the measures used to assess them. Name the "
        "scales.\n\nConsider the cost to users of reviewing inferred goals; a short discussion of that load would "
        "strengthen the section."),
}

entries = [
    {"match": INDUCE, "repeat": True, "response": goals(
        "The user is the author of a research paper and is revising the System section in a LaTeX editor.",
        [("Enhance technical clarity", "Make each component's purpose and interface easy to follow for a technical reader.", 9),
         ("Strengthen evaluation presentation", "Present how the goals were evaluated with explicit measures.", 8),
         ("Tighten section flow", "Reduce repetition between subsections.", 5)])},
    {"match": "What 3 entities (experts, perspectives", "repeat": True, "response": json.dumps({"entities": [
        {"name": n, "description": e[0], "entity_kind": "person"} for n, e in experts.items()]}, indent=2)},
    {"match": "Choose the OUTPUT FORMAT", "repeat": True, "response": "Feedback"},
    {"match": "Several experts reviewed the same content.", "repeat": True,
     "response": "Shared themes: the Technical Writing Specialist and the Human-AI Interaction Researcher both ask for "
                 "explicit definitions, of component purposes and of evaluation measures.\n\nDistinct points: the Systems "
                 "Architecture Expert raises integration with external systems."},
]
for n, (_, bg, score, feedback) in experts.items():
    entries.append(background(n, "\n\n".join(bg)))
    entries.append(relevance(n, score))
    entries.append({"match": "You are responding as the following ENTITY.\n\nENTITY NAME: " + n + "\n", "repeat": True,
                    "response": feedback})
write("experts_transcript.json", entries)

# Tool run on the Figma architecture figure.
designs = [
    {"name": "Component Relationship Diagram Builder",
     "description": "Drag-and-drop canvas for placing system components and drawing typed connections between them.",
     "input_type": "component names from the user's system",
     "output_type": "an editable diagram of components and links",
     "interface_features": ["component library", "drag-and-drop canvas",
                            "typed connections (data flow, feedback, dependency)", "architecture insights button"],
     "expected_user_behavior": ["adds components", "repositions blocks", "connects blocks",
                                "asks for feedback on the layout"],
     "design_guidelines": "Keep the canvas central; show connection types with distinct line styles."},
    {"name": "Architecture Template Gallery",
     "description": "Gallery of common system architecture layouts that can be applied to the current diagram.",
     "input_type": "current frames", "output_type": "a re-arranged diagram",
     "interface_features": ["template thumbnails", "apply button", "preview"],
     "expected_user_behavior": ["browses templates", "applies one"],
     "design_guidelines": "Show previews at a glance."},
    {"name": "Component Style Synchronizer",
     "description": "Unifies colors, fonts and shapes across all blocks of an architecture diagram.",
     "input_type": "selected blocks", "output_type": "consistent styles",
     "interface_features": ["palette picker", "font size presets", "apply to all"],
     "expected_user_behavior": ["picks a palette", "applies it"],
     "design_guidelines": "One click to sync."},
]
design_scores = ["0.94", "0.71", "0.58"]
tool_experts = {
    "AI Systems Architect": ("Designs architectures for AI-assisted applications and reviews how components exchange data.",
                             "Has written about separating user intent modeling from generation in assistant pipelines.",
                             "0.9"),
    "Information Designer": ("Specializes in diagrams that explain technical processes.",
                             "Advocates worked examples placed next to abstract diagrams.", "0.8"),
    "Visual Communication Researcher": ("Studies how readers interpret figures in research papers.",
                                        "Focuses on labeling and legend conventions.", "0.6"),
}
html = (HERE / "diagram_builder.html").read_text()
refined = (HERE / "diagram_builder_refined.html").read_text()

entries = [
    {"match": INDUCE, "repeat": True, "response": goals(
        "The user is drawing a system architecture figure in a design tool for a paper about their AI system.",
        [("Create clear visual representations of the AI system",
          "Produce a figure that shows components and how data moves between them.", 9),
         ("Clarify terminology in the figure", "Make labels consistent, for example goals versus objectives.", 7)])},
    {"match": "What 3 design patterns would be most helpful", "repeat": True,
     "response": "```json\n" + json.dumps({"patterns": designs}, indent=2) + "\n```"},
    {"match": "What 3 entities (experts, perspectives", "repeat": True, "response": json.dumps({"entities": [
        {"name": n, "description": e[0]} for n, e in tool_experts.items()]}, indent=2)},
    {"match": "I would like to generate a tool that combines", "repeat": True, "response": "```html\n" + html + "```"},
    {"match": "I have the following HTML code snippet for a tool:", "repeat": True, "response": json.dumps({
        "critique": "Add a loading indicator for the insights request and group the insight controls.",
        "improved_html": refined})},
    {"match": r"ENTITY NAME: AI Systems Architect\n[\s\S]*A tool the user is working with sent you the REQUEST",
     "regex": True, "repeat": True,
     "response": "The diagram uses goals and objectives as two boxes without saying how one becomes the other."},
]
for d, s in zip(designs, design_scores):
    entries.append(relevance(d["name"], s))
for n, (_, bg, score) in tool_experts.items():
    entries.append(background(n, bg))
    entries.append(relevance(n, score))
write("tools_transcript.json", entries)
