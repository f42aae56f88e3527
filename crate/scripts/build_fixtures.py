#!/usr/bin/env python3
"""Regenerate the fixture corpus and word-vector file under crates/core/data.

Paragraph text and the hand-picked mentions (names, events, noun phrases,
plays with agent links) are listed below. Dates, ordinals and standalone
numbers are added automatically unless a paragraph is marked explicit.

    python3 scripts/build_fixtures.py
"""

import math
import os
import random
import re

ROOT = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "crates", "core", "data")

MONTHS = ["January", "February", "March", "April", "May", "June", "July",
          "August", "September", "October", "November", "December"]
ORDINALS = ["first", "second", "third", "fourth", "fifth", "sixth", "seventh",
            "eighth", "ninth", "tenth"]
UNITS = {"yard", "yards", "point", "points", "percent", "year", "years"}


def M(surface, kind, occ=0, num=None, unit=None, dates=(), link=None):
    return dict(surface=surface, kind=kind, occ=occ, num=num, unit=unit,
                dates=list(dates), link=link)


def play(surface, agent, occ=0, agent_occ=0):
    m = re.match(r"(?:an? )?(\d+)-(\w+)", surface)
    num, unit = (m.group(1), m.group(2)) if m else (None, None)
    return M(surface, "event", occ=occ, num=num, unit=unit,
             link=(agent, "agent", agent_occ))


def locate(text, surface, occ):
    start = -1
    for _ in range(occ + 1):
        start = text.find(surface, start + 1)
        if start < 0:
            raise ValueError(f"{surface!r} (occurrence {occ}) not in {text!r}")
    return start, start + len(surface)


def overlaps(a, b):
    return a[0] < b[1] and b[0] < a[1]


def auto_mentions(text, explicit_spans):
    found = []
    date_spans = []
    month_re = "|".join(MONTHS)
    for m in re.finditer(rf"\b({month_re})(?: (\d{{1,2}}),)? (\d{{4}})\b", text):
        month = MONTHS.index(m.group(1)) + 1
        date = f"{m.group(3)}-{month:02d}"
        if m.group(2):
            date += f"-{int(m.group(2)):02d}"
        found.append(((m.start(), m.end()), "date", None, [date]))
        date_spans.append((m.start(), m.end()))
    for m in re.finditer(r"\b(\d{4})\b", text):
        span = (m.start(), m.end())
        year = int(m.group(1))
        if 1000 <= year <= 2100 and not any(overlaps(span, d) for d in date_spans):
            found.append((span, "date", None, [m.group(1)]))
            date_spans.append(span)
    for m in re.finditer(r"\b(\d+(?:\.\d+)?)(?:-(\w+))?\b", text):
        span = (m.start(), m.end())
        if any(overlaps(span, d) for d in date_spans):
            continue
        if any(overlaps(span, e) for e in explicit_spans):
            continue
        unit = m.group(2) if m.group(2) in UNITS else None
        if unit is None and not m.group(2):
            rest = text[m.end():].split()
            if rest and rest[0].strip(".,;:!?") in UNITS:
                unit = rest[0].strip(".,;:!?")
        found.append((span, "number", (m.group(1), unit), []))
    for m in re.finditer(r"\b(" + "|".join(ORDINALS) + r")\b", text, re.IGNORECASE):
        found.append(((m.start(), m.end()), "ordinal", None, []))
    return found


def P(pid, text, mentions, auto=True):
    return dict(id=pid, text=text, mentions=mentions, auto=auto)


PARAGRAPHS = [
    # Worked-example paragraphs: annotations kept minimal so that the
    # sentence-window semantics of find/filter give the printed answers.
    P("nfl_giants_cardinals",
      "The Giants opened the scoring against the Cardinals with a 7-yard touchdown pass early in the game. "
      "Neil Rackers answered with a 42-yard field goal before halftime. "
      "In the fourth quarter, they added two touchdowns with a 2-yard run by Brandon Jacobs and a 19-yard pass from Eli Manning.",
      [M("Giants", "name"), M("Cardinals", "name"),
       M("7-yard touchdown pass", "event", num="7", unit="yard", link=("Giants", "agent", 0)),
       M("Neil Rackers", "name"), play("42-yard field goal", "Neil Rackers"),
       play("2-yard run", "Brandon Jacobs"), play("19-yard pass", "Eli Manning")],
      auto=False),
    P("nfl_rackers_field_goals",
      "Rackers kicked three field goals for Arizona in the first half, including a 42-yard field goal. "
      "The Giants scored their only touchdown on a 4-yard run by Brandon Jacobs.",
      [M("Rackers", "name"), M("three field goals", "event", link=("Rackers", "agent", 0)),
       M("Arizona", "name"), M("first", "ordinal"), play("42-yard field goal", "Rackers"),
       M("Giants", "name"), play("4-yard run", "Brandon Jacobs"), M("Brandon Jacobs", "name"),
       M("field goals", "noun_phrase"), M("touchdown", "noun_phrase")],
      auto=False),
    P("nfl_packers_chiefs",
      "Aaron Rodgers threw a 32-yard touchdown pass to Greg Jennings in the first quarter. "
      "Matt Cassel answered with a 5-yard touchdown pass to Dwayne Bowe. "
      "Rodgers added a 9-yard touchdown pass to Donald Driver in the third quarter.",
      [M("Aaron Rodgers", "name"), play("32-yard touchdown pass", "Aaron Rodgers"),
       M("Greg Jennings", "name"), M("first", "ordinal"),
       M("Matt Cassel", "name"), play("5-yard touchdown pass", "Matt Cassel"), M("Dwayne Bowe", "name"),
       M("Rodgers", "name", occ=1), play("9-yard touchdown pass", "Rodgers", agent_occ=1),
       M("Donald Driver", "name"), M("third", "ordinal"),
       M("touchdown pass", "noun_phrase", occ=0), M("touchdown pass", "noun_phrase", occ=2)],
      auto=False),
    P("nfl_fitzgerald_receptions",
      "Larry Fitzgerald caught a 14-yard touchdown reception in the second quarter. "
      "Steve Breaston added a 6-yard touchdown reception in the fourth quarter. "
      "Tim Hightower scored on a 3-yard touchdown run.",
      [M("Larry Fitzgerald", "name"), play("14-yard touchdown reception", "Larry Fitzgerald"),
       M("second", "ordinal"), M("Steve Breaston", "name"),
       play("6-yard touchdown reception", "Steve Breaston"), M("fourth", "ordinal"),
       M("Tim Hightower", "name"), play("3-yard touchdown run", "Tim Hightower"),
       M("touchdown reception", "noun_phrase", occ=0), M("touchdown run", "noun_phrase")],
      auto=False),
    P("un_history",
      "The formation of the United Nations took place in October 1945, after the end of the Second World War. "
      "The Universal Declaration of Human Rights was adopted by the General Assembly in December 1948. "
      "The dissolution of the Soviet Union in December 1991 ended the Cold War.",
      [M("formation of the United Nations", "event"), M("October 1945", "date", dates=["1945-10"]),
       M("the end of the Second World War", "event"),
       M("Universal Declaration of Human Rights", "event"), M("General Assembly", "name"),
       M("December 1948", "date", dates=["1948-12"]),
       M("dissolution of the Soviet Union", "event"), M("December 1991", "date", dates=["1991-12"]),
       M("the Cold War", "event")],
      auto=False),

    # Football games.
    P("nfl_steelers_ravens",
      "Ben Roethlisberger threw a 23-yard touchdown pass to Hines Ward in the first quarter. "
      "Matt Stover kicked a 38-yard field goal for the Ravens in the second quarter. "
      "Willie Parker scored on a 12-yard touchdown run in the third quarter. "
      "Jeff Reed kicked a 47-yard field goal in the fourth quarter, and Ray Lewis returned an interception 29 yards.",
      [M("Ben Roethlisberger", "name"), play("23-yard touchdown pass", "Ben Roethlisberger"),
       M("Hines Ward", "name"), M("Matt Stover", "name"), play("38-yard field goal", "Matt Stover"),
       M("Ravens", "name"), M("Willie Parker", "name"), play("12-yard touchdown run", "Willie Parker"),
       M("Jeff Reed", "name"), play("47-yard field goal", "Jeff Reed"), M("Ray Lewis", "name"),
       play("an interception", "Ray Lewis"),
       M("touchdown pass", "noun_phrase"), M("field goal", "noun_phrase"), M("touchdown run", "noun_phrase"),
       M("field goal", "noun_phrase", occ=1)]),
    P("nfl_patriots_colts",
      "Tom Brady opened the game with a 15-yard touchdown pass to Randy Moss in the first quarter. "
      "Adam Vinatieri kicked a 31-yard field goal for the Colts in the second quarter. "
      "Peyton Manning threw a 7-yard touchdown pass to Marvin Harrison in the third quarter. "
      "Stephen Gostkowski kicked a 28-yard field goal in the fourth quarter to seal the win.",
      [M("Tom Brady", "name"), play("15-yard touchdown pass", "Tom Brady"), M("Randy Moss", "name"),
       M("Adam Vinatieri", "name"), play("31-yard field goal", "Adam Vinatieri"), M("Colts", "name"),
       M("Peyton Manning", "name"), play("7-yard touchdown pass", "Peyton Manning"),
       M("Marvin Harrison", "name"), M("Stephen Gostkowski", "name"),
       play("28-yard field goal", "Stephen Gostkowski"),
       M("touchdown pass", "noun_phrase"), M("field goal", "noun_phrase"),
       M("touchdown pass", "noun_phrase", occ=1), M("field goal", "noun_phrase", occ=1)]),
    P("nfl_bears_vikings",
      "Matt Forte ran for a 61-yard touchdown in the first quarter. "
      "Ryan Longwell kicked a 45-yard field goal for the Vikings in the second quarter. "
      "Jay Cutler threw a 3-yard touchdown pass to Greg Olsen in the second quarter. "
      "Adrian Peterson scored on a 2-yard touchdown run in the fourth quarter.",
      [M("Matt Forte", "name"), play("61-yard touchdown", "Matt Forte"),
       M("Ryan Longwell", "name"), play("45-yard field goal", "Ryan Longwell"), M("Vikings", "name"),
       M("Jay Cutler", "name"), play("3-yard touchdown pass", "Jay Cutler"), M("Greg Olsen", "name"),
       M("Adrian Peterson", "name"), play("2-yard touchdown run", "Adrian Peterson"),
       M("field goal", "noun_phrase"), M("touchdown pass", "noun_phrase"),
       M("touchdown run", "noun_phrase")]),
    P("nfl_cowboys_eagles",
      "Tony Romo threw a 52-yard touchdown pass to Terrell Owens in the first quarter. "
      "David Akers kicked a 33-yard field goal for the Eagles in the third quarter. "
      "Marion Barber scored on a 1-yard touchdown run in the third quarter. "
      "Nick Folk kicked a 40-yard field goal in the fourth quarter.",
      [M("Tony Romo", "name"), play("52-yard touchdown pass", "Tony Romo"), M("Terrell Owens", "name"),
       M("David Akers", "name"), play("33-yard field goal", "David Akers"), M("Eagles", "name"),
       M("Marion Barber", "name"), play("1-yard touchdown run", "Marion Barber"),
       M("Nick Folk", "name"), play("40-yard field goal", "Nick Folk"),
       M("touchdown pass", "noun_phrase"), M("field goal", "noun_phrase"),
       M("touchdown run", "noun_phrase"), M("field goal", "noun_phrase", occ=1)]),
    P("nfl_chargers_broncos",
      "LaDainian Tomlinson scored on a 9-yard touchdown run in the first quarter. "
      "Jason Elam kicked a 44-yard field goal for the Broncos in the second quarter. "
      "Jay Cutler found Brandon Marshall for a 20-yard touchdown pass in the second quarter. "
      "Nate Kaeding kicked a 36-yard field goal in the fourth quarter, and Champ Bailey returned an interception 41 yards.",
      [M("LaDainian Tomlinson", "name"), play("9-yard touchdown run", "LaDainian Tomlinson"),
       M("Jason Elam", "name"), play("44-yard field goal", "Jason Elam"), M("Broncos", "name"),
       M("Jay Cutler", "name"), M("Brandon Marshall", "name"), play("20-yard touchdown pass", "Jay Cutler"),
       M("Nate Kaeding", "name"), play("36-yard field goal", "Nate Kaeding"), M("Champ Bailey", "name"),
       play("an interception", "Champ Bailey"),
       M("touchdown run", "noun_phrase"), M("field goal", "noun_phrase"),
       M("touchdown pass", "noun_phrase"), M("field goal", "noun_phrase", occ=1)]),
    P("nfl_seahawks_rams",
      "Matt Hasselbeck threw an 11-yard touchdown pass to Darrell Jackson in the first quarter. "
      "Jeff Wilkins kicked a 50-yard field goal for the Rams in the second quarter. "
      "Shaun Alexander scored on a 5-yard touchdown run in the third quarter. "
      "Josh Brown kicked a 27-yard field goal in the fourth quarter.",
      [M("Matt Hasselbeck", "name"), play("11-yard touchdown pass", "Matt Hasselbeck"),
       M("Darrell Jackson", "name"), M("Jeff Wilkins", "name"), play("50-yard field goal", "Jeff Wilkins"),
       M("Rams", "name"), M("Shaun Alexander", "name"), play("5-yard touchdown run", "Shaun Alexander"),
       M("Josh Brown", "name"), play("27-yard field goal", "Josh Brown"),
       M("touchdown pass", "noun_phrase"), M("field goal", "noun_phrase"),
       M("touchdown run", "noun_phrase"), M("field goal", "noun_phrase", occ=1)]),

    # History.
    P("french_revolution",
      "In 1787 the crisis deepened as the royal treasury ran out of money. "
      "Two years later the French Revolution began with the storming of the Bastille in July 1789. "
      "Napoleon Bonaparte led the coup of November 1799 and ended the revolutionary government.",
      [M("the crisis", "event"), M("the royal treasury", "noun_phrase"),
       M("the French Revolution", "event"), M("the storming of the Bastille", "event"),
       M("Napoleon Bonaparte", "name"),
       M("the coup of November 1799", "event", dates=["1799-11"], link=("Napoleon Bonaparte", "agent", 0)),
       M("the revolutionary government", "noun_phrase")]),
    P("franco_dutch_war",
      "Between 1672 and 1674 the Allies took five towns from the Dutch during the Franco-Dutch War. "
      "William of Orange led the Dutch defense and opened the dikes in June 1672. "
      "The Treaty of Nijmegen ended the war in 1678.",
      [M("Allies", "name"), M("five towns", "noun_phrase"), M("Dutch", "name"),
       M("the Franco-Dutch War", "event"), M("William of Orange", "name"),
       M("the Dutch defense", "event", link=("William of Orange", "agent", 0)),
       M("the dikes", "noun_phrase"), M("Treaty of Nijmegen", "event")]),
    P("kandyan_wars",
      "After the second Kandyan War broke out in 1803, British troops marched on Kandy. "
      "The fall of the Kingdom of Kandy came in 1815. "
      "Sri Lanka gained independence from Britain in February 1948.",
      [M("the second Kandyan War", "event"), M("British troops", "noun_phrase"),
       M("Kandy", "name"), M("fall of the Kingdom of Kandy", "event"),
       M("Sri Lanka", "name"), M("independence from Britain", "event"), M("Britain", "name")]),
    P("oil_crises",
      "In October 1973 the oil crisis began when Arab producers imposed an embargo on Western nations. "
      "Six years later the energy crisis followed the Iranian Revolution in 1979. "
      "Fuel prices doubled within 12 months.",
      [M("the oil crisis", "event"), M("Arab producers", "name"), M("an embargo", "event"),
       M("Western nations", "noun_phrase"), M("the energy crisis", "event"),
       M("the Iranian Revolution", "event"), M("Fuel prices", "noun_phrase")]),
    P("american_revolution",
      "The American Revolutionary War began with the battle of Lexington in April 1775. "
      "The Declaration of Independence was signed in July 1776. "
      "George Washington led the Continental Army to victory at Yorktown in October 1781. "
      "The Treaty of Paris was signed in September 1783.",
      [M("American Revolutionary War", "event"), M("the battle of Lexington", "event"),
       M("Lexington", "name"), M("Declaration of Independence", "event"),
       M("George Washington", "name"), M("the Continental Army", "name"),
       M("victory at Yorktown", "event", link=("George Washington", "agent", 0)),
       M("Treaty of Paris", "event")]),
    P("world_war_one",
      "The First World War began in July 1914 after the assassination of Archduke Franz Ferdinand. "
      "The United States entered the war in April 1917. "
      "The armistice was signed on November 11, 1918, and the Treaty of Versailles followed in June 1919.",
      [M("First World War", "event"), M("the assassination of Archduke Franz Ferdinand", "event"),
       M("Archduke Franz Ferdinand", "name"), M("United States", "name"),
       M("armistice", "event"), M("the Treaty of Versailles", "event")]),
    P("space_race",
      "The launch of Sputnik by the Soviet Union came in October 1957. "
      "Yuri Gagarin completed the first crewed orbit of the Earth in April 1961. "
      "Neil Armstrong led the Apollo 11 landing on the Moon in July 1969.",
      [M("launch of Sputnik", "event"), M("Soviet Union", "name"), M("Yuri Gagarin", "name"),
       M("the first crewed orbit of the Earth", "event", link=("Yuri Gagarin", "agent", 0)),
       M("Neil Armstrong", "name"),
       M("the Apollo 11 landing", "event", link=("Neil Armstrong", "agent", 0)),
       M("Moon", "name")]),
    P("norman_conquest",
      "William the Conqueror led the Norman invasion of England in September 1066. "
      "The Battle of Hastings was fought in October 1066. "
      "The Domesday Book survey was completed in 1086.",
      [M("William the Conqueror", "name"),
       M("the Norman invasion of England", "event", link=("William the Conqueror", "agent", 0)),
       M("England", "name"), M("Battle of Hastings", "event"), M("Domesday Book survey", "event")]),
    P("magna_carta",
      "King John sealed the Magna Carta at Runnymede in June 1215. "
      "Pope Innocent III annulled the charter in August 1215. "
      "The First Barons' War lasted from 1215 to 1217.",
      [M("King John", "name"), M("the Magna Carta", "event", link=("King John", "agent", 0)),
       M("Runnymede", "name"), M("Pope Innocent III", "name"),
       M("the charter", "noun_phrase", link=("Pope Innocent III", "agent", 0)),
       M("First Barons' War", "event")]),
    P("berlin_wall",
      "The construction of the Berlin Wall began in August 1961. "
      "President Kennedy made his famous visit to West Berlin in June 1963. "
      "The fall of the Berlin Wall came in November 1989, and German reunification followed in October 1990.",
      [M("construction of the Berlin Wall", "event"), M("President Kennedy", "name"),
       M("visit to West Berlin", "event", link=("President Kennedy", "agent", 0)),
       M("West Berlin", "name"), M("fall of the Berlin Wall", "event"),
       M("German reunification", "event")]),
    P("railway_age",
      "James Watt received the steam engine patent in 1769. "
      "The opening of the first public railway came in September 1825. "
      "George Stephenson led the construction of the Liverpool Railway, which opened in 1830.",
      [M("James Watt", "name"), M("the steam engine patent", "event", link=("James Watt", "agent", 0)),
       M("opening of the first public railway", "event"), M("George Stephenson", "name"),
       M("the construction of the Liverpool Railway", "event", link=("George Stephenson", "agent", 0))]),
    P("ottoman_sieges",
      "Sultan Mehmed II led the siege of Constantinople in April 1453. "
      "The fall of the city came in May 1453. "
      "The Ottoman sieges of Vienna took place in 1529 and 1683.",
      [M("Sultan Mehmed II", "name"),
       M("the siege of Constantinople", "event", link=("Sultan Mehmed II", "agent", 0)),
       M("fall of the city", "event"), M("Ottoman sieges of Vienna", "event"), M("Vienna", "name")]),
    P("civil_rights",
      "Rosa Parks refused to give up her seat in December 1955, which started the Montgomery bus boycott. "
      "Martin Luther King led the March on Washington in August 1963. "
      "The Civil Rights Act was signed in July 1964.",
      [M("Rosa Parks", "name"), M("her seat", "noun_phrase"),
       M("the Montgomery bus boycott", "event", link=("Rosa Parks", "agent", 0)),
       M("Martin Luther King", "name"),
       M("the March on Washington", "event", link=("Martin Luther King", "agent", 0)),
       M("Civil Rights Act", "event")]),
]


def render_paragraph(p):
    text = p["text"]
    rows = []
    explicit_spans = []
    for m in p["mentions"]:
        span = locate(text, m["surface"], m["occ"])
        explicit_spans.append(span)
        attrs = [f"kind={m['kind']}"]
        if m["num"] is not None:
            attrs.append(f"num={m['num']}" + (f":{m['unit']}" if m["unit"] else ""))
        for d in m["dates"]:
            attrs.append(f"date={d}")
        if m["link"]:
            target, role, occ = m["link"]
            ls, le = locate(text, target, occ)
            attrs.append(f"link={ls}:{le}:{role}")
        rows.append((span, attrs))
    if p["auto"]:
        for span, kind, num, dates in auto_mentions(text, explicit_spans):
            attrs = [f"kind={kind}"]
            if num:
                attrs.append(f"num={num[0]}" + (f":{num[1]}" if num[1] else ""))
            for d in dates:
                attrs.append(f"date={d}")
            rows.append((span, attrs))
    rows.sort(key=lambda r: (r[0][0], r[0][1], r[1][0]))
    lines = [f"#PARA {p['id']}", text]
    lines += [f"#MENTION {s}:{e} " + " ".join(a) for (s, e), a in rows]
    return "\n".join(lines)


def tokenize(text):
    out = []
    for raw in text.lower().split():
        tok = raw.strip("!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~")
        if tok:
            out.append(tok)
    return out


EXTRA_WORDS = """
how many what which who whom when where why was were is are did does do the a an of in on at to for from
by with and or as it that this score scored scores scoring kick kicked kicks threw throw caught catch
longest shortest most least first second third fourth last later earlier before after happened happen
first-half half quarter quarters game games touchdown touchdowns pass passes run runs reception receptions
field goal goals yards yard points point years year long take took led lead between passed longer
war battle treaty revolution crisis event events team teams player players
""".split()


def main():
    paragraphs = [render_paragraph(p) for p in PARAGRAPHS]
    with open(os.path.join(ROOT, "corpus.txt"), "w") as f:
        f.write("\n\n".join(paragraphs) + "\n")

    vocab = set(EXTRA_WORDS)
    for p in PARAGRAPHS:
        vocab.update(tokenize(p["text"]))
    with open(os.path.join(ROOT, "templates.txt")) as f:
        for line in f:
            if line.startswith(("prefix:", "pattern:", "arg ")):
                body = re.sub(r"<\w+:\d+>", " ", line.split(":", 1)[1])
                vocab.update(tokenize(body))

    dim = 64
    rng = random.Random(2020)
    scale = 1.0 / math.sqrt(dim)
    with open(os.path.join(ROOT, "vectors.txt"), "w") as f:
        f.write(f"D {dim}\n")
        for word in sorted(vocab):
            values = " ".join(f"{rng.gauss(0.0, scale):.5f}" for _ in range(dim))
            f.write(f"{word} {values}\n")
    print(f"{len(paragraphs)} paragraphs, {len(vocab)} vector entries")


if __name__ == "__main__":
    main()
