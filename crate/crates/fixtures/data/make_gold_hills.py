"""Writes the Gold Hills search fixture and its expected GSnip text.

The expected text is computed here, independently of the Rust code: take the
first k results in rank order, skip empty snippets, join with one space and
strip the ends.
"""
import json

snippets = [
    "Gold Hills Mining, Ltd. is a junior exploration company focused on gold projects in Nevada.",
    "Gold Hills Mining Ltd. (TSX-V: GHM) reports drill results from its Bonanza Ridge property.",
    "  The company holds 12 claims covering 2,400 hectares of prospective ground.",
    "Gold Hills Mining – company profile, executives, and financial statements.",
    "Exploration at the Eldorado target intersected 3.1 g/t Au over 14 m.",
    "Gold Hills Mining Ltd. announces closing of a C$4.5 million private placement.",
    "",
    "Investors’ presentation: open-pit heap-leach scenario and metallurgical test work.",
    "Headquartered in Vancouver, British Columbia; CEO José Alvarez.",
    "Gold Hills Mining Ltd. is listed under SIC 1040, gold and silver ores.  ",
]
titles = [f"Gold Hills Mining result {i}" for i in range(1, 11)]
response = {
    "search_metadata": {"status": "Success"},
    "search_parameters": {"q": "Gold Hills Mining, Ltd.", "num": 10},
    "organic_results": [
        {
            "position": i + 1,
            "title": titles[i],
            "link": f"https://example.com/gold-hills/{i + 1}",
            "snippet": s,
        }
        for i, s in enumerate(snippets)
    ],
}

with open("gold_hills_search.json", "w", encoding="utf-8") as f:
    json.dump(response, f, ensure_ascii=False, indent=2)
    f.write("\n")

for k in (1, 5, 10):
    text = " ".join(s for s in snippets[:k] if s != "").strip()
    with open(f"gold_hills_gsnip{k}.txt", "w", encoding="utf-8", newline="") as f:
        f.write(text)
