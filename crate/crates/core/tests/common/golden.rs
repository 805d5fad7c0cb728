/// Input and the exact sentence texts expected from it, in order.
pub const GOLDEN: &[(&str, &[&str])] = &[
    (
        "The working hours are 9 AM to 5 PM, and the store is open from Sunday to Saturday.",
        &["The working hours are 9 AM to 5 PM, and the store is open from Sunday to Saturday."],
    ),
    ("Hours are 9-5. Open Sunday to Saturday.", &["Hours are 9-5.", "Open Sunday to Saturday."]),
    ("Dr. Smith approved it. See p. 4 for details.", &["Dr. Smith approved it.", "See p. 4 for details."]),
    ("Mr. and Mrs. Lee arrived. They sat down.", &["Mr. and Mrs. Lee arrived.", "They sat down."]),
    ("Use a badge, e.g. the blue one. Return it daily.", &["Use a badge, e.g. the blue one.", "Return it daily."]),
    ("Bring documents, i.e. ID and contract. Then sign.", &["Bring documents, i.e. ID and contract.", "Then sign."]),
    ("The rate is 3.5 percent. It was 2.75 last year.", &["The rate is 3.5 percent.", "It was 2.75 last year."]),
    ("Pay rose by $1,200.50 in total. Nobody complained.", &["Pay rose by $1,200.50 in total.", "Nobody complained."]),
    ("Version 2.0.1 ships today. Update soon.", &["Version 2.0.1 ships today.", "Update soon."]),
    ("Is it open? Yes it is!", &["Is it open?", "Yes it is!"]),
    ("Really?! That is late.", &["Really?!", "That is late."]),
    ("Wait... Then it closed.", &["Wait...", "Then it closed."]),
    ("He said \"Stop.\" Then he left.", &["He said \"Stop.\"", "Then he left."]),
    ("It ended (finally.) Everyone cheered.", &["It ended (finally.)", "Everyone cheered."]),
    (
        "First paragraph without a stop\n\nSecond paragraph here",
        &["First paragraph without a stop", "Second paragraph here"],
    ),
    ("One line\ncontinues here. Next sentence.", &["One line\ncontinues here.", "Next sentence."]),
    ("- Bring an ID\n- Sign the form\n- Wear the uniform", &["- Bring an ID", "- Sign the form", "- Wear the uniform"]),
    ("* alpha\n* beta", &["* alpha", "* beta"]),
    ("1. Arrive early.\n2. Clock in.\n3. Start work.", &["1. Arrive early.", "2. Clock in.", "3. Start work."]),
    ("Steps:\n1) Open the door\n2) Turn on lights", &["Steps:", "1) Open the door", "2) Turn on lights"]),
    (
        "Leave starts in Jan. and ends in March. Plan ahead.",
        &["Leave starts in Jan. and ends in March.", "Plan ahead."],
    ),
    ("See Fig. 3 and No. 7 for the list. Done.", &["See Fig. 3 and No. 7 for the list.", "Done."]),
    ("Ask J. R. Tolkien about it. He knows.", &["Ask J. R. Tolkien about it.", "He knows."]),
    (
        "The office is in the U.S. and Canada. Both are open.",
        &["The office is in the U.S. and Canada.", "Both are open."],
    ),
    ("Shops close at 5 p.m. Staff leave after.", &["Shops close at 5 p.m.", "Staff leave after."]),
    ("Compare A vs. B carefully. Pick one.", &["Compare A vs. B carefully.", "Pick one."]),
    ("no capital after this. still the same sentence.", &["no capital after this. still the same sentence."]),
    ("There are 12 staff. 3 of them are managers.", &["There are 12 staff.", "3 of them are managers."]),
    ("   Leading and trailing spaces.   ", &["Leading and trailing spaces."]),
    (
        "Paragraph one ends. Another follows.\n\n- item one\n- item two",
        &["Paragraph one ends.", "Another follows.", "- item one", "- item two"],
    ),
];

/// Building blocks for random concatenations.
pub const SENTENCE_POOL: &[&str] = &[
    "The store opens at 9 AM.",
    "Dr. Smith approved the schedule.",
    "Staff get 14 days of leave.",
    "The rate is 3.5 percent.",
    "See p. 4 for details.",
    "Is the shop open on Sunday?",
    "Yes!",
    "Probation lasts three months, i.e. one quarter.",
    "Mrs. Lee manages the branch.",
    "Salaries are paid on the 25th.",
    "Uniforms must be worn e.g. on the floor.",
    "Personal devices stay in lockers.",
    "Media requests go to J. Park.",
    "Wages rose by $1,200.50 this year.",
    "Leave resets in Jan. every year.",
    "\"Be on time.\"",
    "Overtime needs approval.",
    "It closes at 5 p.m.",
    "Version 2.0.1 is current.",
    "Why?!",
];
