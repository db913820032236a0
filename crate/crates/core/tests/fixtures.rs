use std::path::Path;

use loopwalk::search::{find_fixture, Fixture, FixtureKind};
use loopwalk::walks::{classify_tunneling, TunnelingClass};

const KINDS: [FixtureKind; 4] =
    [FixtureKind::AsymptoticFinite, FixtureKind::AsymptoticAdjacent, FixtureKind::Partial, FixtureKind::NoTunneling];

fn load(kind: FixtureKind) -> (String, Fixture) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(format!("{}.txt", kind.name()));
    let text = std::fs::read_to_string(&path).unwrap();
    let fixture = Fixture::from_text(&text).unwrap();
    (text, fixture)
}

#[test]
fn checked_in_fixtures_have_their_kind() {
    for kind in KINDS {
        let (_, f) = load(kind);
        assert_eq!(f.kind, kind);
        assert!(kind.accepts(f.c, f.pair.d), "{kind}");
        let class = classify_tunneling(f.c, f.pair.d);
        let expected = match kind {
            FixtureKind::AsymptoticFinite | FixtureKind::AsymptoticAdjacent => TunnelingClass::Asymptotic,
            FixtureKind::Partial => TunnelingClass::Partial,
            FixtureKind::NoTunneling => TunnelingClass::NoTunneling,
        };
        assert_eq!(class, expected, "{kind}");
    }
}

#[test]
fn search_reproduces_checked_in_fixtures() {
    for kind in KINDS {
        let (text, f) = load(kind);
        let found = find_fixture(kind, 8, 1).unwrap_or_else(|| panic!("no {kind} fixture found"));
        assert_eq!(found, f, "{kind}");
        assert_eq!(found.to_text(1, 8), text, "{kind}");
    }
}
