"""Writes dvt-like.json and dvt-small.json.

Synthetic reconstruction of a suspected-DVT management network: venography,
or up to four non-invasive tests (IPG or RUS) separated by optional waits,
followed by an anticoagulation policy. Every probability and cost here is
invented for illustration and is not clinical data.
"""

import json
import os

HERE = os.path.dirname(os.path.abspath(__file__))

# dvt states: 0 none, 1 calf, 2 thigh; encoded by the dvt and thigh flags
PREVALENCE = {0: 0.65, 1: 0.15, 2: 0.20}
STATE = {0: "dvt = 0", 1: "dvt = 1 & thigh = 0", 2: "dvt = 1 & thigh = 1"}
SET_STATE = {0: {"dvt": "0", "thigh": "0"}, 1: {"dvt": "1", "thigh": "0"}, 2: {"dvt": "1", "thigh": "1"}}

# probability of a positive result per dvt state, and cost
NIT_TESTS = {
    "IPG": ({0: 0.05, 1: 0.25, 2: 0.90}, 15),
    "RUS": ({0: 0.03, 1: 0.45, 2: 0.95}, 25),
}
VENO = ({0: 0.01, 1: 0.95, 2: 0.97}, 90)

# waits while untreated: calf to thigh extension, death from thigh dvt
WAITS = {
    "No_Wait": (0.0, 0.0),
    "Wait_3d": (0.12, 0.005),
    "Wait_7d": (0.25, 0.01),
}

DEATH_UNTREATED = {0: 0.0, 1: 0.015, 2: 0.10}
DOSES = {
    "": ({0: 0.004, 1: 0.007, 2: 0.016}, 250),
    "_Low": ({0: 0.0015, 1: 0.008, 2: 0.025}, 180),
}

# treatment policies as disjoint cells: (condition, treat?)
POLICIES = {
    "All": [("true", True)],
    "None": [("true", False)],
    "Last+": [("nit = 1", True), ("nit = 0", False)],
    "Any+": [("npos >= 1", True), ("npos < 1", False)],
    "Two+": [("npos >= 2", True), ("npos < 2", False)],
    "Three+": [("npos >= 3", True), ("npos < 3", False)],
    "Last+_or_Two+": [("nit = 1", True), ("nit = 0 & npos >= 2", True), ("nit = 0 & npos < 2", False)],
    "Veno+": [("vpos = 1", True), ("vpos = 0", False)],
    "Veno_Thigh+": [("vthigh = 1", True), ("vthigh = 0", False)],
}

R = lambda p: round(p, 12)


def br(when, prob, effects):
    return {"when": when, "prob": R(prob), "effects": effects}


def nit_test(sens, cost):
    out = []
    for d in (0, 1, 2):
        p = sens[d]
        out.append(br(STATE[d], p, {"cost": f"cost + {cost}", "nit": "1", "npos": "npos + 1"}))
        out.append(br(STATE[d], 1 - p, {"cost": f"cost + {cost}", "nit": "0"}))
    return out


def veno():
    sens, cost = VENO
    out = []
    for d in (0, 1, 2):
        p = sens[d]
        pos = {"cost": f"cost + {cost}", "vpos": "1", "vthigh": "1" if d == 2 else "0"}
        out.append(br(STATE[d], p, pos))
        out.append(br(STATE[d], 1 - p, {"cost": f"cost + {cost}", "vpos": "0", "vthigh": "0"}))
    return out


def wait(extend, death):
    # every wait has the same cells so that their abstraction lines up
    return [
        br(STATE[0], 1, {}),
        br(STATE[1], extend, {"thigh": "1"}),
        br(STATE[1], 1 - extend, {}),
        br(STATE[2], death, {"dead": "1"}),
        br(STATE[2], 1 - death, {}),
    ]


def treat(policy, dose):
    death_t, cost = DOSES[dose]
    out = []
    for cell, treated in POLICIES[policy]:
        for d in (0, 1, 2):
            when = STATE[d] if cell == "true" else f"{cell} & {STATE[d]}"
            if treated:
                p, eff = death_t[d], {"cost": f"cost + {cost}"}
            else:
                p, eff = DEATH_UNTREATED[d], {}
            out.append(br(when, p, dict(eff, dead="1")))
            out.append(br(when, 1 - p, eff))
    return {"branches": out}


def treat_name(policy, dose):
    if policy == "None":
        return "Treat_None"
    return f"Treat_{policy}{dose}"


def build(strategies, treat_menu, waits=tuple(WAITS)):
    actions = {}
    actions["Presentation"] = {"branches": [br("true", PREVALENCE[d], SET_STATE[d]) for d in (0, 1, 2)]}
    for name, (sens, cost) in NIT_TESTS.items():
        actions[name] = {"branches": nit_test(sens, cost)}
    actions["Veno"] = {"branches": veno()}
    for name in waits:
        extend, death = WAITS[name]
        actions[name] = {"branches": wait(extend, death)}
    used = set()
    for menu in treat_menu.values():
        used.update(menu)
    for policy, dose in sorted(used, key=lambda x: (x[1], x[0])):
        actions[treat_name(policy, dose)] = treat(policy, dose)

    # network
    actions["NIT"] = {"abstract": list(NIT_TESTS)}
    if len(waits) > 1:
        actions["Wait"] = {"abstract": list(waits)}
    menu_parts = {}
    for menu_name, menu in treat_menu.items():
        menu_parts[menu_name] = []
        names = [treat_name(p, d) for p, d in menu]
        groups = {}
        for (p, d), n in zip(menu, names):
            key = "None" if p == "None" else ("Full" if d == "" else "Low")
            groups.setdefault(key, []).append(n)
        if len(groups) > 1 and len(names) > 4:
            parts = []
            for key, members in groups.items():
                if len(members) == 1:
                    parts.append(members[0])
                else:
                    sub = f"{menu_name}_{key}"
                    actions[sub] = {"abstract": members}
                    menu_parts[menu_name].append(sub)
                    parts.append(sub)
            actions[menu_name] = {"abstract": parts}
        else:
            actions[menu_name] = {"abstract": names}
    seqs = {
        "Veno_Tests": ["Veno", "Treat_Veno"],
        "NIT_Tests": ["NIT", "Treat_NIT"],
        "Two_Tests": ["NIT", "Wait", "NIT", "Treat"],
        "Three_Tests": ["NIT", "Wait", "NIT", "Wait", "NIT", "Treat"],
        "Four_Tests": ["NIT", "Wait", "NIT", "Wait", "NIT", "Wait", "NIT", "Treat"],
    }
    wait_step = "Wait" if len(waits) > 1 else waits[0]
    for s in strategies:
        if s in seqs:
            actions[s] = {"decompose": [wait_step if x == "Wait" else x for x in seqs[s]]}
    actions["Manage_DVT"] = {"abstract": strategies}
    # the treatment decision first, then the waits, then the test choices
    priorities = {"Manage_DVT": 5}
    for menu_name, subs in menu_parts.items():
        priorities[menu_name] = 4
        priorities.update({sub: 3 for sub in subs})
    if len(waits) > 1:
        priorities["Wait"] = 2
    priorities["NIT"] = 1
    actions["Root"] = {"decompose": ["Presentation", "Manage_DVT"]}

    return {
        "attributes": [
            {"name": "cost", "kind": "numeric", "default": 0, "range": [0, 2000]},
            {"name": "dvt", "kind": "boolean", "default": False},
            {"name": "thigh", "kind": "boolean", "default": False},
            {"name": "nit", "kind": "boolean", "default": False},
            {"name": "npos", "kind": "numeric", "default": 0, "range": [0, 4]},
            {"name": "vpos", "kind": "boolean", "default": False},
            {"name": "vthigh", "kind": "boolean", "default": False},
            {"name": "dead", "kind": "boolean", "default": False},
        ],
        "constants": {"COST_FATALITY": 100000},
        "actions": actions,
        "network": {"root": "Root"},
        "initial": {},
        "utility": {
            "k_r": 1,
            "ug": [{"when": "true", "value": "0"}],
            "ur": [
                {"when": "dead = 1", "value": "-(cost + COST_FATALITY)"},
                {"when": "dead = 0", "value": "-cost"},
            ],
        },
        "priorities": priorities,
    }


FULL = [(p, "") for p in ("All", "Last+", "Any+", "Two+", "Three+", "Last+_or_Two+")]
LOW = [(p, "_Low") for p in ("All", "Last+", "Any+", "Two+", "Three+")]
MENUS = {
    "No_Tests_and_Treat": [("All", ""), ("All", "_Low")],
    "Treat_Veno": [("Veno+", ""), ("Veno+", "_Low"), ("Veno_Thigh+", ""), ("Veno_Thigh+", "_Low")],
    "Treat_NIT": [("Last+", ""), ("Last+", "_Low"), ("All", ""), ("All", "_Low")],
    "Treat": FULL + LOW + [("None", "")],
}
ALL = ["No_Tests_and_Treat", "Veno_Tests", "NIT_Tests", "Two_Tests", "Three_Tests", "Four_Tests"]


def write(name, doc):
    with open(os.path.join(HERE, name), "w") as f:
        json.dump(doc, f, indent=2)
        f.write("\n")


if __name__ == "__main__":
    write("dvt-like.json", build(ALL, MENUS))
    small_menus = dict(MENUS, Treat=[("Last+", ""), ("Any+", ""), ("Last+", "_Low"), ("Any+", "_Low")])
    small = ["No_Tests_and_Treat", "Veno_Tests", "NIT_Tests", "Two_Tests"]
    write("dvt-small.json", build(small, small_menus, waits=("Wait_7d",)))
