//! Shared string parsers for flags and config-file values.

use antex::diffusion::ConductionKind;
use antex::gabor::Component;

/// Integer lists: a comma list ("10,20,40"), an inclusive range with
/// optional step ("10..200:10", "0..5"), or a single value.
pub fn usize_list(s: &str) -> Result<Vec<usize>, String> {
    let s = s.trim();
    if let Some((range, step)) = split_range(s)? {
        let (lo, hi) = range;
        if step == 0 {
            return Err("step must be positive".into());
        }
        if hi < lo {
            return Err(format!("empty range {lo}..{hi}"));
        }
        return Ok((lo..=hi).step_by(step).collect());
    }
    s.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<usize>()
                .map_err(|_| format!("bad integer {tok:?}"))
        })
        .collect()
}

fn split_range(s: &str) -> Result<Option<((usize, usize), usize)>, String> {
    let Some((lo, rest)) = s.split_once("..") else {
        return Ok(None);
    };
    let (hi, step) = match rest.split_once(':') {
        Some((hi, step)) => (
            hi,
            step.trim()
                .parse::<usize>()
                .map_err(|_| format!("bad step {step:?}"))?,
        ),
        None => (rest, 1),
    };
    let lo = lo
        .trim()
        .parse::<usize>()
        .map_err(|_| format!("bad range start {lo:?}"))?;
    let hi = hi
        .trim()
        .parse::<usize>()
        .map_err(|_| format!("bad range end {hi:?}"))?;
    Ok(Some(((lo, hi), step)))
}

pub fn component_list(s: &str) -> Result<Vec<Component>, String> {
    let mut out = Vec::new();
    for tok in s.split(',') {
        let c = component(tok)?;
        if !out.contains(&c) {
            out.push(c);
        }
    }
    if out.is_empty() {
        return Err("empty component list".into());
    }
    Ok(out)
}

pub fn component(s: &str) -> Result<Component, String> {
    match s.trim().to_ascii_lowercase().as_str() {
        "f" | "original" => Ok(Component::Original),
        "u" | "cartoon" => Ok(Component::Cartoon),
        "v" | "texture" => Ok(Component::Texture),
        other => Err(format!("unknown component {other:?} (expected f, u or v)")),
    }
}

pub fn conduction(s: &str) -> Result<ConductionKind, String> {
    match s.trim().to_ascii_lowercase().as_str() {
        "exp" | "exponential" => Ok(ConductionKind::Exponential),
        "rat" | "rational" => Ok(ConductionKind::Rational),
        other => Err(format!(
            "unknown conduction {other:?} (expected exponential or rational)"
        )),
    }
}

/// The four decomposition routes the benchmark grid can compare.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecomposerName {
    PeronaMalik,
    Gaussian,
    Laplacian,
    Log,
}

impl DecomposerName {
    pub fn as_str(&self) -> &'static str {
        match self {
            DecomposerName::PeronaMalik => "perona_malik",
            DecomposerName::Gaussian => "gaussian",
            DecomposerName::Laplacian => "laplacian",
            DecomposerName::Log => "log",
        }
    }
}

pub fn decomposer(s: &str) -> Result<DecomposerName, String> {
    match s.trim().to_ascii_lowercase().as_str() {
        "pm" | "perona_malik" | "perona-malik" => Ok(DecomposerName::PeronaMalik),
        "gaussian" => Ok(DecomposerName::Gaussian),
        "laplacian" => Ok(DecomposerName::Laplacian),
        "log" => Ok(DecomposerName::Log),
        other => Err(format!("unknown decomposer {other:?}")),
    }
}

pub fn decomposer_list(s: &str) -> Result<Vec<DecomposerName>, String> {
    let mut out = Vec::new();
    for tok in s.split(',') {
        let d = decomposer(tok)?;
        if !out.contains(&d) {
            out.push(d);
        }
    }
    if out.is_empty() {
        return Err("empty decomposer list".into());
    }
    Ok(out)
}

pub fn boolean(s: &str) -> Result<bool, String> {
    match s.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        other => Err(format!("bad boolean {other:?}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integer_lists() {
        assert_eq!(usize_list("40").unwrap(), vec![40]);
        assert_eq!(usize_list("10,20, 30").unwrap(), vec![10, 20, 30]);
        assert_eq!(usize_list("10..50:10").unwrap(), vec![10, 20, 30, 40, 50]);
        assert_eq!(usize_list("0..3").unwrap(), vec![0, 1, 2, 3]);
        assert!(usize_list("10..5:1").is_err());
        assert!(usize_list("1..10:0").is_err());
        assert!(usize_list("abc").is_err());
    }

    #[test]
    fn enums() {
        assert_eq!(component("V").unwrap(), Component::Texture);
        assert_eq!(
            component_list("f,v,f").unwrap(),
            vec![Component::Original, Component::Texture]
        );
        assert!(component("x").is_err());
        assert_eq!(conduction("exp").unwrap(), ConductionKind::Exponential);
        assert_eq!(decomposer("pm").unwrap(), DecomposerName::PeronaMalik);
        assert_eq!(
            decomposer_list("gaussian,log").unwrap(),
            vec![DecomposerName::Gaussian, DecomposerName::Log]
        );
        assert!(boolean("yes").unwrap());
        assert!(!boolean("0").unwrap());
    }
}
