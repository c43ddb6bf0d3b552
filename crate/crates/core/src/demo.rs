//! Seeded generator of encyclopedia-style tables for examples, tests and
//! offline corpus runs when no WikiTables dump is at hand.
//!
//! Tables come from a handful of domains (league standings, athletes,
//! buildings, elections, films, rivers). Each has one entity column, a
//! categorical column whose values repeat, a few numeric columns and
//! occasionally a free-text column.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::finetune::{Label, Statement};
use crate::table::{ColumnKind, Table};
use crate::text::{parse_number, render_rounded, Decimal};

const PLACES: &[&str] = &[
    "north", "south", "east", "west", "port", "lake", "river", "mount", "saint", "new", "old",
    "upper", "lower", "green", "red", "stone", "iron", "silver", "golden", "royal",
];
const TOWNS: &[&str] = &[
    "harbor", "valley", "haven", "ridge", "field", "brook", "ford", "bridge", "wood", "castle",
    "marsh", "cliff", "springs", "meadow", "crossing", "hill", "bay", "point", "falls", "grove",
    "hampton", "dale", "moor", "gate",
];
const MASCOTS: &[&str] = &[
    "rovers",
    "united",
    "city",
    "wanderers",
    "athletic",
    "rangers",
    "albion",
    "county",
    "town",
    "hotspur",
    "villa",
    "olympic",
    "dynamo",
    "sporting",
    "athletico",
    "celtic",
];
const FIRST: &[&str] = &[
    "james", "maria", "li", "ahmed", "sofia", "ivan", "kenji", "emma", "carlos", "fatima", "peter",
    "anna", "lars", "chen", "olga", "diego", "amara", "tomas", "yuki", "nadia", "pierre", "ingrid",
    "rafael", "hana",
];
const LAST: &[&str] = &[
    "smith",
    "garcia",
    "wang",
    "okafor",
    "novak",
    "silva",
    "kowalski",
    "tanaka",
    "mueller",
    "rossi",
    "dubois",
    "jensen",
    "petrov",
    "haddad",
    "costa",
    "lindqvist",
    "moreau",
    "fischer",
    "santos",
    "nakamura",
    "oconnor",
    "van der berg",
    "de la cruz",
    "al rashid",
];
const NATIONS: &[&str] = &[
    "united states",
    "france",
    "japan",
    "brazil",
    "kenya",
    "norway",
    "italy",
    "australia",
    "south korea",
    "canada",
    "new zealand",
    "germany",
    "spain",
    "south africa",
    "united kingdom",
    "czech republic",
    "united arab emirates",
    "papua new guinea",
    "democratic republic of the congo",
    "trinidad and tobago",
];
const DIVISIONS: &[&str] = &[
    "premier division",
    "first division north",
    "first division south",
    "second division",
    "northern conference",
    "southern conference",
];
const PARTIES: &[&str] = &[
    "national liberal party",
    "labour party",
    "green party",
    "social democratic party",
    "conservative party",
    "independent",
    "peoples alliance for progress",
];
const REGIONS: &[&str] = &[
    "central european plain",
    "east african rift",
    "great plains",
    "west siberian lowland",
    "pampas",
    "indo gangetic plain",
    "murray darling basin",
    "pacific northwest",
];
const GENRES: &[&str] = &[
    "crime drama",
    "comedy",
    "science fiction",
    "documentary",
    "action thriller",
    "romantic comedy",
    "historical drama",
    "animated feature",
    "psychological horror",
    "musical comedy",
];
const POSITIONS: &[&str] = &[
    "centre forward",
    "attacking midfielder",
    "central defender",
    "goalkeeper",
    "left winger",
    "defensive midfielder",
];
const ADJ: &[&str] = &[
    "silent", "last", "broken", "hidden", "distant", "crimson", "endless", "little", "second",
    "wild", "quiet", "burning", "winter", "summer", "lost", "bright",
];
const NOUN: &[&str] = &[
    "river", "garden", "empire", "promise", "road", "horizon", "kingdom", "letter", "harvest",
    "voyage", "station", "shadow", "island", "season", "mirror", "lantern",
];
const VENUES: &[&str] = &[
    "memorial stadium",
    "park",
    "arena",
    "municipal ground",
    "national stadium",
    "sports ground",
    "community stadium",
];
const STREETS: &[&str] = &["street", "avenue", "road", "boulevard", "square", "lane"];
const STUDIOS: &[&str] = &[
    "pictures",
    "film company",
    "studios",
    "productions",
    "media group",
];

fn place<R: Rng>(rng: &mut R) -> String {
    format!(
        "{}{}",
        PLACES.choose(rng).unwrap(),
        TOWNS.choose(rng).unwrap()
    )
}

/// A place name that is sometimes written as two words.
fn locality<R: Rng>(rng: &mut R) -> String {
    if rng.random_bool(0.5) {
        format!(
            "{} {}",
            PLACES.choose(rng).unwrap(),
            TOWNS.choose(rng).unwrap()
        )
    } else {
        place(rng)
    }
}

fn person<R: Rng>(rng: &mut R) -> String {
    if rng.random_bool(0.25) {
        format!(
            "{} {}. {}",
            FIRST.choose(rng).unwrap(),
            (b'a' + rng.random_range(0..26u8)) as char,
            LAST.choose(rng).unwrap()
        )
    } else {
        format!(
            "{} {}",
            FIRST.choose(rng).unwrap(),
            LAST.choose(rng).unwrap()
        )
    }
}

fn address<R: Rng>(rng: &mut R) -> String {
    format!(
        "{} {} {}",
        rng.random_range(1..999),
        locality(rng),
        STREETS.choose(rng).unwrap()
    )
}

fn title<R: Rng>(rng: &mut R) -> String {
    match rng.random_range(0..3) {
        0 => format!(
            "the {} {}",
            ADJ.choose(rng).unwrap(),
            NOUN.choose(rng).unwrap()
        ),
        1 => format!(
            "{} of the {}",
            NOUN.choose(rng).unwrap(),
            NOUN.choose(rng).unwrap()
        ),
        _ => format!(
            "a {} {} {}",
            ADJ.choose(rng).unwrap(),
            NOUN.choose(rng).unwrap(),
            rng.random_range(2..4)
        ),
    }
}

/// Distinct entity names from `make`.
fn entities<R: Rng>(rng: &mut R, n: usize, make: fn(&mut R) -> String) -> Vec<String> {
    let mut out: Vec<String> = Vec::with_capacity(n);
    let mut guard = 0;
    while out.len() < n && guard < n * 50 {
        let e = make(rng);
        if !out.contains(&e) {
            out.push(e);
        }
        guard += 1;
    }
    while out.len() < n {
        let k = out.len();
        out.push(format!("{} {k}", make(rng)));
    }
    out
}

/// Categorical values: a small pool sampled with repetition.
fn categories<R: Rng>(rng: &mut R, n: usize, pool: &[&str]) -> Vec<String> {
    let k = rng.random_range(2..=pool.len().min(5));
    let chosen: Vec<&str> = pool.choose_multiple(rng, k).copied().collect();
    (0..n)
        .map(|_| chosen.choose(rng).unwrap().to_string())
        .collect()
}

/// Values drawn with repetition from about `n / 3` generated ones, as when
/// several rows share a studio or an architecture firm.
fn shared<R: Rng>(rng: &mut R, n: usize, make: fn(&mut R) -> String) -> Vec<String> {
    let pool: Vec<String> = (0..(n / 3).max(2)).map(|_| make(rng)).collect();
    (0..n).map(|_| pool.choose(rng).unwrap().clone()).collect()
}

fn ints<R: Rng>(rng: &mut R, n: usize, lo: i64, hi: i64) -> Vec<String> {
    (0..n)
        .map(|_| rng.random_range(lo..=hi).to_string())
        .collect()
}

fn with_commas(v: i64) -> String {
    let s = v.to_string();
    let mut out = String::new();
    for (i, c) in s.chars().enumerate() {
        if i > 0 && (s.len() - i).is_multiple_of(3) {
            out.push(',');
        }
        out.push(c);
    }
    out
}

fn decimals<R: Rng>(rng: &mut R, n: usize, lo: f64, hi: f64) -> Vec<String> {
    (0..n)
        .map(|_| format!("{:.1}", rng.random_range(lo..hi)))
        .collect()
}

struct Draft {
    title: String,
    columns: Vec<(String, Vec<String>)>,
}

fn standings<R: Rng>(rng: &mut R, n: usize) -> Draft {
    let teams = entities(rng, n, |r| {
        format!("{} {}", place(r), MASCOTS.choose(r).unwrap())
    });
    let played = rng.random_range(20..40);
    let won: Vec<i64> = (0..n).map(|_| rng.random_range(0..=played)).collect();
    let lost: Vec<i64> = won
        .iter()
        .map(|w| rng.random_range(0..=(played - w)))
        .collect();
    let points: Vec<String> = won
        .iter()
        .zip(&lost)
        .map(|(w, l)| (3 * w + (played - w - l)).to_string())
        .collect();
    let stadiums: Vec<String> = (0..n)
        .map(|_| format!("{} {}", locality(rng), VENUES.choose(rng).unwrap()))
        .collect();
    Draft {
        title: format!("{} league season", rng.random_range(1950..2020)),
        columns: vec![
            ("team".into(), teams),
            ("division".into(), categories(rng, n, DIVISIONS)),
            ("stadium".into(), stadiums),
            ("manager".into(), (0..n).map(|_| person(rng)).collect()),
            ("won".into(), won.iter().map(i64::to_string).collect()),
            ("lost".into(), lost.iter().map(i64::to_string).collect()),
            ("points".into(), points),
            (
                "attendance".into(),
                (0..n)
                    .map(|_| with_commas(rng.random_range(1_000..80_000)))
                    .collect(),
            ),
        ],
    }
}

fn athletes<R: Rng>(rng: &mut R, n: usize) -> Draft {
    Draft {
        title: "squad list".into(),
        columns: vec![
            ("player".into(), entities(rng, n, person)),
            ("position".into(), categories(rng, n, POSITIONS)),
            ("nation".into(), categories(rng, n, NATIONS)),
            (
                "club".into(),
                shared(rng, n, |r| {
                    format!("{} {}", locality(r), MASCOTS.choose(r).unwrap())
                }),
            ),
            ("age".into(), ints(rng, n, 17, 39)),
            (
                "height".into(),
                decimals(rng, n, 1.60, 2.05)
                    .iter()
                    .map(|h| h.to_string())
                    .collect(),
            ),
            ("weight".into(), ints(rng, n, 55, 105)),
            ("goals".into(), ints(rng, n, 0, 60)),
        ],
    }
}

fn buildings<R: Rng>(rng: &mut R, n: usize) -> Draft {
    let names = entities(rng, n, |r| {
        let kind = ["tower", "plaza", "centre", "building", "house"]
            .choose(r)
            .unwrap();
        format!(
            "{} {} {}",
            PLACES.choose(r).unwrap(),
            TOWNS.choose(r).unwrap(),
            kind
        )
    });
    Draft {
        title: "tallest buildings".into(),
        columns: vec![
            ("name".into(), names),
            (
                "city".into(),
                categories(
                    rng,
                    n,
                    &[
                        "new york city",
                        "chicago",
                        "hong kong",
                        "dubai",
                        "london",
                        "sao paulo",
                        "kuala lumpur",
                        "ho chi minh city",
                    ],
                ),
            ),
            ("address".into(), (0..n).map(|_| address(rng)).collect()),
            (
                "architect".into(),
                shared(rng, n, |r| {
                    format!(
                        "{} and {} architects",
                        LAST.choose(r).unwrap(),
                        LAST.choose(r).unwrap()
                    )
                }),
            ),
            ("height".into(), ints(rng, n, 120, 830)),
            ("floors".into(), ints(rng, n, 25, 163)),
            ("year".into(), ints(rng, n, 1930, 2023)),
        ],
    }
}

fn elections<R: Rng>(rng: &mut R, n: usize) -> Draft {
    let votes: Vec<i64> = (0..n).map(|_| rng.random_range(500..90_000)).collect();
    let total: i64 = votes.iter().sum();
    Draft {
        title: format!("{} general election", rng.random_range(1900..2024)),
        columns: vec![
            ("candidate".into(), entities(rng, n, person)),
            ("party".into(), categories(rng, n, PARTIES)),
            (
                "constituency".into(),
                (0..n)
                    .map(|_| format!("{} and {}", place(rng), place(rng)))
                    .collect(),
            ),
            (
                "votes".into(),
                votes.iter().map(|v| with_commas(*v)).collect(),
            ),
            (
                "share".into(),
                votes
                    .iter()
                    .map(|v| format!("{:.1}%", *v as f64 * 100.0 / total as f64))
                    .collect(),
            ),
        ],
    }
}

fn films<R: Rng>(rng: &mut R, n: usize) -> Draft {
    Draft {
        title: "filmography".into(),
        columns: vec![
            ("title".into(), entities(rng, n, title)),
            ("genre".into(), categories(rng, n, GENRES)),
            ("director".into(), (0..n).map(|_| person(rng)).collect()),
            (
                "studio".into(),
                shared(rng, n, |r| {
                    format!("{} {}", locality(r), STUDIOS.choose(r).unwrap())
                }),
            ),
            ("year".into(), ints(rng, n, 1950, 2023)),
            (
                "gross".into(),
                (0..n)
                    .map(|_| format!("${}", with_commas(rng.random_range(100_000..900_000_000))))
                    .collect(),
            ),
            ("length".into(), ints(rng, n, 78, 201)),
        ],
    }
}

fn rivers<R: Rng>(rng: &mut R, n: usize) -> Draft {
    Draft {
        title: "rivers by length".into(),
        columns: vec![
            (
                "river".into(),
                entities(rng, n, |r| {
                    format!(
                        "{} {} river",
                        PLACES.choose(r).unwrap(),
                        TOWNS.choose(r).unwrap()
                    )
                }),
            ),
            ("region".into(), categories(rng, n, REGIONS)),
            (
                "mouth".into(),
                (0..n)
                    .map(|_| match rng.random_range(0..3) {
                        0 => format!("gulf of {}", locality(rng)),
                        1 => format!("the {} sea", locality(rng)),
                        _ => format!("{} river near {}", locality(rng), locality(rng)),
                    })
                    .collect(),
            ),
            ("length".into(), ints(rng, n, 80, 6_600)),
            ("discharge".into(), ints(rng, n, 10, 9_000)),
        ],
    }
}

/// Remark templates per domain; `{year}` and `{place}` are filled in.
const NOTES: [&[&str]; 6] = [
    &[
        "promoted from the second division",
        "relegated at the end of the season",
        "moved to {place} in {year}",
        "deducted points for fielding an ineligible player",
    ],
    &[
        "on loan from {place} rovers",
        "joined the squad in {year}",
        "captain since {year}",
        "missed the final through injury",
    ],
    &[
        "tallest in the city until {year}",
        "renovated after a fire in {year}",
        "originally planned as an office block",
        "topped out in {year}",
    ],
    &[
        "elected at a by-election in {year}",
        "previously sat for {place}",
        "lost the deposit",
        "stood down at the next election",
    ],
    &[
        "shot on location in {place}",
        "remake of the {year} original",
        "released direct to video",
        "won the audience award in {year}",
    ],
    &[
        "navigable as far as {place}",
        "dammed near {place} in {year}",
        "forms part of the border",
        "frozen for part of the winter",
    ],
];

/// A sparse remarks column: about half the cells are empty.
fn notes<R: Rng>(rng: &mut R, n: usize, domain: usize) -> Vec<String> {
    (0..n)
        .map(|_| {
            if rng.random_bool(0.5) {
                return String::new();
            }
            NOTES[domain]
                .choose(rng)
                .unwrap()
                .replace("{year}", &rng.random_range(1900..2024).to_string())
                .replace("{place}", &locality(rng))
        })
        .collect()
}

/// One table of 4..=`max_rows` rows (at least 4) with a random domain.
pub fn demo_table<R: Rng>(rng: &mut R, id: &str, max_rows: usize) -> Table {
    let n = rng.random_range(4..=max_rows.max(4));
    let domain = rng.random_range(0..6);
    let mut draft = match domain {
        0 => standings(rng, n),
        1 => athletes(rng, n),
        2 => buildings(rng, n),
        3 => elections(rng, n),
        4 => films(rng, n),
        _ => rivers(rng, n),
    };
    if rng.random_bool(0.6) {
        draft.columns.push(("notes".into(), notes(rng, n, domain)));
    }
    let mut columns = draft.columns;
    // keep the entity column first, shuffle the rest
    columns[1..].shuffle(rng);
    let headers = columns.iter().map(|(h, _)| h.clone()).collect();
    let rows = (0..n)
        .map(|r| columns.iter().map(|(_, c)| c[r].clone()).collect())
        .collect();
    Table::new(id, headers, rows).with_title(draft.title)
}

/// `count` tables with ids `demo-00000`, `demo-00001`, ...
pub fn demo_tables(count: usize, seed: u64) -> Vec<Table> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| demo_table(&mut rng, &format!("demo-{i:05}"), 40))
        .collect()
}

/// Fact-verification statements in the style of a TabFact test set: for
/// each table, one statement per operation type about a random numeric
/// column, true or false with equal chance and labelled accordingly. Ids
/// are `{table}-{type}`. Tables without a usable numeric column are skipped.
pub fn demo_statements(tables: &[Table], seed: u64) -> Vec<Statement> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for t in tables {
        let numeric: Vec<usize> = (0..t.num_columns())
            .filter(|&c| t.kind(c) == ColumnKind::Numeric)
            .filter(|&c| t.rows.iter().all(|r| parse_number(&r[c]).is_some()))
            .collect();
        let Some(&c) = numeric.choose(&mut rng) else {
            continue;
        };
        if t.num_rows() < 3 {
            continue;
        }
        let values: Vec<Decimal> = t
            .rows
            .iter()
            .map(|r| parse_number(&r[c]).unwrap())
            .collect();
        let name = |r: usize| t.cell(r, 0);
        let h = t.header(c);
        let mut order: Vec<usize> = (0..t.num_rows()).collect();
        order.sort_by(|&a, &b| values[b].cmp(&values[a]));
        let mut push = |op: &str, text: String, truth: bool| {
            let mut s = Statement::new(&format!("{}-{op}", t.id), &text, &t.id);
            s.label = Some(if truth {
                Label::Entailed
            } else {
                Label::Refuted
            });
            out.push(s);
        };

        let (a, b) = (
            rng.random_range(0..t.num_rows()),
            rng.random_range(0..t.num_rows()),
        );
        push(
            "filter",
            format!("{} 's {h} is {}", name(a), t.cell(b, c)),
            values[a] == values[b],
        );
        let pick = if rng.random_bool(0.5) {
            order[0]
        } else {
            order[1]
        };
        let top_unique = values[order[0]] != values[order[1]];
        push(
            "superlative",
            format!("{} has the highest {h}", name(pick)),
            pick == order[0] && top_unique,
        );
        let avg = values
            .iter()
            .fold(Decimal::from_integer(0.into()), |s, v| s + v)
            / Decimal::from_integer((values.len() as i64).into());
        let stated = if rng.random_bool(0.5) {
            avg.clone()
        } else {
            avg.clone() + Decimal::from_integer(1.into())
        };
        push(
            "aggregation",
            format!("the average {h} is {}", render_rounded(&stated)),
            render_rounded(&stated) == render_rounded(&avg),
        );
        push(
            "comparative",
            format!("{} has a higher {h} than {}", name(a), name(b)),
            values[a] > values[b],
        );
        let pick = if rng.random_bool(0.5) {
            order[1]
        } else {
            order[2]
        };
        let second_unique = top_unique && values[order[1]] != values[order[2]];
        push(
            "ordinal",
            format!("{} has the second highest {h}", name(pick)),
            pick == order[1] && second_unique,
        );
        let categorical = (1..t.num_columns()).find(|&k| {
            t.kind(k) == ColumnKind::Text && (0..t.num_rows()).all(|r| !t.cell(r, k).is_empty())
        });
        if let Some(k) = categorical {
            let distinct: std::collections::HashSet<String> =
                (0..t.num_rows()).map(|r| t.cell(r, k)).collect();
            let stated = distinct.len() + usize::from(rng.random_bool(0.5));
            push(
                "unique",
                format!("there are {stated} different {} values", t.header(k)),
                stated == distinct.len(),
            );
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::filter_pretrain_eligible;

    #[test]
    fn tables_are_eligible_and_deterministic() {
        let a = demo_tables(60, 5);
        assert_eq!(a, demo_tables(60, 5));
        for t in &a {
            assert!(t.is_rectangular());
            assert!(filter_pretrain_eligible(t), "{:?}", t.headers);
            assert!(t.column_kinds.contains(&ColumnKind::Text));
        }
    }

    #[test]
    fn commas() {
        assert_eq!(with_commas(1234567), "1,234,567");
        assert_eq!(with_commas(999), "999");
    }

    #[test]
    fn statements_mostly_classify_as_intended() {
        let tables = demo_tables(200, 2);
        let statements = demo_statements(&tables, 9);
        let catalog = crate::finetune::TriggerCatalog::default();
        let hits = statements
            .iter()
            .filter(|s| catalog.classify(&s.text).map(|op| op.name()) == s.id.rsplit('-').next())
            .count();
        assert!(
            hits * 10 >= statements.len() * 9,
            "{hits} of {}",
            statements.len()
        );
        let labels: std::collections::HashSet<_> = statements.iter().map(|s| s.label).collect();
        assert_eq!(labels.len(), 2);
    }
}
