use super::model::ExperimentModel;
use super::{BetaForm, PairLaw, SpdcError};

/// Keys understood by [`parse_model_config`] and [`set_model_key`].
pub const MODEL_KEYS: [&str; 17] = [
    "mu", "law", "r", "visibility", "alpha_a1", "alpha_a2", "alpha_b1", "alpha_b2", "eta_a", "eta_b", "p_dark",
    "p_misalign", "q0a", "q0b", "qu", "q", "beta",
];

/// Parses a flat `key = value` model file. Blank lines and `#` comments are
/// skipped; keys not given keep the values of [`ExperimentModel::experiment`].
pub fn parse_model_config(text: &str) -> Result<ExperimentModel, SpdcError> {
    let mut m = ExperimentModel::experiment();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| SpdcError::Config {
            line,
            message: format!("expected key = value, got {content:?}"),
        })?;
        set_model_key(&mut m, key.trim(), value.trim()).map_err(|message| SpdcError::Config { line, message })?;
    }
    m.validate()?;
    Ok(m)
}

/// Sets one model parameter from its text form. Ranges are not checked
/// here; call [`ExperimentModel::validate`] once all keys are applied.
pub fn set_model_key(m: &mut ExperimentModel, key: &str, value: &str) -> Result<(), String> {
    let num = || -> Result<f64, String> {
        value
            .parse::<f64>()
            .map_err(|_| format!("{key}: {value:?} is not a number"))
    };
    match key {
        "mu" => m.source.mu = num()?,
        "law" => m.source.law = PairLaw::parse(value).ok_or_else(|| format!("unknown pair law {value:?}"))?,
        "r" => m.state.r = num()?,
        "visibility" => m.state.visibility = num()?,
        "alpha_a1" => m.angles.alice[0] = num()?,
        "alpha_a2" => m.angles.alice[1] = num()?,
        "alpha_b1" => m.angles.bob[0] = num()?,
        "alpha_b2" => m.angles.bob[1] = num()?,
        "eta_a" => m.detector.eta_a = num()?,
        "eta_b" => m.detector.eta_b = num()?,
        "p_dark" => m.detector.p_dark = num()?,
        "p_misalign" => m.detector.p_misalign = num()?,
        "q0a" => m.detector.q0_a = num()?,
        "q0b" => m.detector.q0_b = num()?,
        "qu" => m.detector.q_u = num()?,
        "q" => m.q = num()?,
        "beta" => m.beta = BetaForm::parse(value).ok_or_else(|| format!("unknown beta form {value:?}"))?,
        _ => return Err(format!("unknown key {key:?}")),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_keeps_defaults() {
        let m = parse_model_config("# bench setup\nmu = 0.05\nlaw = poisson\n\neta_a=0.9 # better detector\nbeta = as-printed\n").unwrap();
        assert_eq!(m.source.mu, 0.05);
        assert_eq!(m.source.law, PairLaw::Poisson);
        assert_eq!(m.detector.eta_a, 0.9);
        assert_eq!(m.detector.eta_b, ExperimentModel::experiment().detector.eta_b);
        assert_eq!(m.beta, BetaForm::AsPrinted);
    }

    #[test]
    fn reports_line_numbers() {
        let e = parse_model_config("mu = 0.1\nfoo = 3\n").unwrap_err();
        assert!(matches!(e, SpdcError::Config { line: 2, .. }), "{e}");
        let e = parse_model_config("eta_a = lots\n").unwrap_err();
        assert!(matches!(e, SpdcError::Config { line: 1, .. }));
        let e = parse_model_config("mu\n").unwrap_err();
        assert!(matches!(e, SpdcError::Config { line: 1, .. }));
    }

    #[test]
    fn validates_ranges() {
        assert!(matches!(parse_model_config("eta_b = 1.5"), Err(SpdcError::OutOfRange { .. })));
        assert!(matches!(parse_model_config("q = 0"), Err(SpdcError::OutOfRange { .. })));
    }
}
