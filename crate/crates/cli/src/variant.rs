//! State/reward scheme selection by tag.

use anyhow::bail;
use headwayrl::baselines::{SchemeOne, SchemeTwo};
use headwayrl::env::{FeatureMask, Scheme, StandardScheme};
use headwayrl::line_model::LineConfig;

/// Parses `full`, `s_m`, `scheme-one`, `scheme-two`, `drop-feature:x1x2`,
/// `drop-feature:x4`, ... and the `s_m-x1-x2` tags stored in checkpoints.
pub fn scheme_for(tag: &str, line: &LineConfig) -> anyhow::Result<Box<dyn Scheme<f64>>> {
    Ok(match tag {
        "full" | "s_m" => Box::new(StandardScheme::default()),
        "scheme-one" => Box::new(SchemeOne::<f64>::new(line)),
        "scheme-two" => Box::new(SchemeTwo::new(line)),
        _ => {
            let features = if let Some(list) = tag.strip_prefix("drop-feature:") {
                parse_features(list.split('x').filter(|s| !s.is_empty()))
            } else if let Some(list) = tag.strip_prefix("s_m-") {
                parse_features(list.split('-').map(|s| s.trim_start_matches('x')))
            } else {
                None
            };
            match features {
                Some(f) if !f.is_empty() && f.len() < 6 => Box::new(StandardScheme {
                    mask: FeatureMask::without(&f),
                }),
                _ => bail!("unknown variant {tag:?}; expected full, scheme-one, scheme-two or drop-feature:x<N>..."),
            }
        }
    })
}

fn parse_features<'a>(parts: impl Iterator<Item = &'a str>) -> Option<Vec<usize>> {
    let mut out = Vec::new();
    for p in parts {
        let n: usize = p.parse().ok()?;
        if !(1..=6).contains(&n) || out.contains(&n) {
            return None;
        }
        out.push(n);
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tags_round_trip_through_names() {
        let line = LineConfig::new(10, 0, 100);
        for tag in [
            "full",
            "drop-feature:x1x2",
            "drop-feature:x4",
            "scheme-one",
            "scheme-two",
        ] {
            let s = scheme_for(tag, &line).unwrap();
            let again = scheme_for(&s.name(), &line).unwrap();
            assert_eq!(again.name(), s.name());
            assert_eq!(again.state_dim(&line), s.state_dim(&line));
        }
        assert_eq!(
            scheme_for("drop-feature:x4", &line)
                .unwrap()
                .state_dim(&line),
            5
        );
        assert_eq!(
            scheme_for("drop-feature:x1x2", &line).unwrap().name(),
            "s_m-x1-x2"
        );
    }

    #[test]
    fn bad_tags_fail() {
        let line = LineConfig::new(10, 0, 100);
        for tag in [
            "",
            "drop-feature:",
            "drop-feature:x7",
            "drop-feature:x1x1",
            "scheme-three",
            "drop-feature:x1x2x3x4x5x6",
        ] {
            assert!(scheme_for(tag, &line).is_err(), "{tag}");
        }
    }
}
