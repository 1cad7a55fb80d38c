//! Line-oriented text format for explicit POMDPs.
//!
//! ```text
//! pomdp
//! states: 4 s0 s1 s2 s3      # count, then optional names
//! actions: a b
//! observations: u v w
//! start: 0:0.5 1:0.5
//! T: 0 a 1 1.0               # P(s'|s,a)
//! O: 0 u 1.0                 # O(z|s)
//! R: 1 a 10                  # R(s,a)
//! avail: 2 a                 # optional, default: every action
//! label reach: 3
//! ```
//!
//! States may be referenced by index or name; actions and observations by
//! name or index. Unlisted `T`/`O`/`R` entries are zero.

use std::fmt::Write as _;

use crate::error::ModelError;
use crate::model::{ActionSet, Pomdp, PomdpBuilder};

pub fn parse_model(text: &str) -> Result<Pomdp, ModelError> {
    Parser::default().parse(text)
}

/// Renders `m` so that `parse_model(&serialize_model(m)) == m`.
pub fn serialize_model(m: &Pomdp) -> String {
    let mut out = String::from("pomdp\n");
    let default_names = m.state_names().iter().enumerate().all(|(i, n)| *n == i.to_string());
    write!(out, "states: {}", m.num_states()).unwrap();
    if !default_names {
        for name in m.state_names() {
            write!(out, " {name}").unwrap();
        }
    }
    writeln!(out).unwrap();
    writeln!(out, "actions: {}", m.action_names().join(" ")).unwrap();
    writeln!(out, "observations: {}", m.obs_names().join(" ")).unwrap();
    write!(out, "start:").unwrap();
    for &(s, p) in m.initial() {
        write!(out, " {s}:{p}").unwrap();
    }
    writeln!(out).unwrap();
    let all = ActionSet::full(m.num_actions());
    for s in 0..m.num_states() {
        if m.available(s) != all {
            let names: Vec<&str> = m.available(s).iter().map(|a| m.action_name(a)).collect();
            writeln!(out, "avail: {s} {}", names.join(" ")).unwrap();
        }
    }
    for s in 0..m.num_states() {
        for a in m.available(s).iter() {
            for &(t, p) in m.successors(s, a) {
                writeln!(out, "T: {s} {} {t} {p}", m.action_name(a)).unwrap();
            }
        }
    }
    for s in 0..m.num_states() {
        for &(z, p) in m.observations(s) {
            writeln!(out, "O: {s} {} {p}", m.obs_name(z)).unwrap();
        }
    }
    for s in 0..m.num_states() {
        for a in 0..m.num_actions() {
            let r = m.reward(s, a);
            if r != 0.0 {
                writeln!(out, "R: {s} {} {r}", m.action_name(a)).unwrap();
            }
        }
    }
    for (name, states) in m.labels() {
        let ids: Vec<String> = states.iter().map(|s| s.to_string()).collect();
        writeln!(out, "label {name}: {}", ids.join(" ")).unwrap();
    }
    out
}

#[derive(Default)]
struct Parser {
    builder: Option<PomdpBuilder>,
    states: Option<(usize, Vec<String>)>,
    actions: Option<Vec<String>>,
    observations: Option<Vec<String>>,
    // directives that need the vocabularies, replayed once all three are known
    pending: Vec<(usize, String)>,
}

fn syntax(line: usize, message: impl Into<String>) -> ModelError {
    ModelError::Syntax { line, message: message.into() }
}

impl Parser {
    fn parse(mut self, text: &str) -> Result<Pomdp, ModelError> {
        let mut header_seen = false;
        let mut last_line = 0;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            last_line = line_no;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if !header_seen {
                if line != "pomdp" {
                    return Err(syntax(line_no, "expected header line `pomdp`"));
                }
                header_seen = true;
                continue;
            }
            let (key, rest) = line
                .split_once(':')
                .ok_or_else(|| syntax(line_no, format!("expected `key: value`, found {line:?}")))?;
            let key = key.trim();
            let rest = rest.trim();
            match key {
                "states" => {
                    let mut parts = rest.split_whitespace();
                    let n: usize = parts
                        .next()
                        .ok_or_else(|| syntax(line_no, "missing state count"))?
                        .parse()
                        .map_err(|_| syntax(line_no, "state count must be a non-negative integer"))?;
                    if n == 0 {
                        return Err(syntax(line_no, "a model needs at least one state"));
                    }
                    let names: Vec<String> = parts.map(str::to_string).collect();
                    if !names.is_empty() && names.len() != n {
                        return Err(syntax(line_no, format!("{} names given for {n} states", names.len())));
                    }
                    if self.states.replace((n, names)).is_some() {
                        return Err(syntax(line_no, "duplicate `states` section"));
                    }
                    self.vocabulary_known()?;
                }
                "actions" => {
                    let names = vocabulary(line_no, rest)?;
                    if names.len() > crate::model::MAX_ACTIONS {
                        return Err(ModelError::TooManyActions(names.len()));
                    }
                    if self.actions.replace(names).is_some() {
                        return Err(syntax(line_no, "duplicate `actions` section"));
                    }
                    self.vocabulary_known()?;
                }
                "observations" => {
                    let names = vocabulary(line_no, rest)?;
                    if self.observations.replace(names).is_some() {
                        return Err(syntax(line_no, "duplicate `observations` section"));
                    }
                    self.vocabulary_known()?;
                }
                _ => {
                    if self.builder.is_some() {
                        self.directive(line_no, line)?;
                    } else {
                        self.pending.push((line_no, line.to_string()));
                    }
                }
            }
        }
        if !header_seen {
            return Err(syntax(last_line.max(1), "empty document; expected header line `pomdp`"));
        }
        if self.builder.is_none() {
            let missing = [
                ("states", self.states.is_none()),
                ("actions", self.actions.is_none()),
                ("observations", self.observations.is_none()),
            ]
            .iter()
            .filter(|(_, m)| *m)
            .map(|(n, _)| *n)
            .collect::<Vec<_>>()
            .join(", ");
            return Err(syntax(last_line, format!("missing section(s): {missing}")));
        }
        self.builder.take().expect("checked above").build()
    }

    /// Creates the builder once all three vocabularies are declared and
    /// replays the directives seen before that point.
    fn vocabulary_known(&mut self) -> Result<(), ModelError> {
        if self.builder.is_some() {
            return Ok(());
        }
        if let (Some((n, names)), Some(actions), Some(obs)) = (&self.states, &self.actions, &self.observations) {
            let mut b = PomdpBuilder::new(*n, actions.clone(), obs.clone());
            if !names.is_empty() {
                b.state_names(names.clone());
            }
            self.builder = Some(b);
            for (line_no, text) in std::mem::take(&mut self.pending) {
                self.directive(line_no, &text)?;
            }
        }
        Ok(())
    }

    fn state(&self, line: usize, tok: &str) -> Result<usize, ModelError> {
        let (n, names) = self.states.as_ref().expect("vocabulary known");
        if let Ok(i) = tok.parse::<usize>() {
            if i < *n {
                return Ok(i);
            }
            if names.is_empty() {
                return Err(syntax(line, format!("state {i} out of range (have {n})")));
            }
        }
        names
            .iter()
            .position(|s| s == tok)
            .ok_or_else(|| syntax(line, format!("unknown state {tok:?}")))
    }

    fn action(&self, line: usize, tok: &str) -> Result<usize, ModelError> {
        lookup_name(self.actions.as_ref().expect("vocabulary known"), tok)
            .ok_or_else(|| syntax(line, format!("unknown action {tok:?}")))
    }

    fn observation(&self, line: usize, tok: &str) -> Result<usize, ModelError> {
        lookup_name(self.observations.as_ref().expect("vocabulary known"), tok)
            .ok_or_else(|| syntax(line, format!("unknown observation {tok:?}")))
    }

    fn directive(&mut self, line: usize, text: &str) -> Result<(), ModelError> {
        let (key, rest) = text.split_once(':').expect("checked by caller");
        let key = key.trim();
        let toks: Vec<&str> = rest.split_whitespace().collect();
        let arity = |k: usize| {
            if toks.len() == k {
                Ok(())
            } else {
                Err(syntax(line, format!("`{key}` expects {k} fields, found {}", toks.len())))
            }
        };
        match key {
            "start" => {
                for tok in &toks {
                    let (s, p) = tok
                        .split_once(':')
                        .ok_or_else(|| syntax(line, format!("expected <state>:<prob>, found {tok:?}")))?;
                    let s = self.state(line, s)?;
                    let p = number(line, p)?;
                    self.builder_mut().initial(s, p);
                }
            }
            "T" => {
                arity(4)?;
                let s = self.state(line, toks[0])?;
                let a = self.action(line, toks[1])?;
                let t = self.state(line, toks[2])?;
                let p = number(line, toks[3])?;
                self.builder_mut().transition(s, a, t, p);
            }
            "O" => {
                arity(3)?;
                let s = self.state(line, toks[0])?;
                let z = self.observation(line, toks[1])?;
                let p = number(line, toks[2])?;
                self.builder_mut().observation(s, z, p);
            }
            "R" => {
                arity(3)?;
                let s = self.state(line, toks[0])?;
                let a = self.action(line, toks[1])?;
                let r = number(line, toks[2])?;
                self.builder_mut().reward(s, a, r);
            }
            "avail" => {
                if toks.len() < 2 {
                    return Err(syntax(line, "`avail` expects a state and at least one action"));
                }
                let s = self.state(line, toks[0])?;
                let set = toks[1..]
                    .iter()
                    .map(|t| self.action(line, t))
                    .collect::<Result<ActionSet, _>>()?;
                self.builder_mut().set_available(s, set);
            }
            _ => {
                let name = key
                    .strip_prefix("label")
                    .map(str::trim)
                    .filter(|n| !n.is_empty() && !n.contains(char::is_whitespace))
                    .ok_or_else(|| syntax(line, format!("unknown directive {key:?}")))?;
                let states = toks.iter().map(|t| self.state(line, t)).collect::<Result<Vec<_>, _>>()?;
                self.builder_mut().label(name, states);
            }
        }
        Ok(())
    }

    fn builder_mut(&mut self) -> &mut PomdpBuilder {
        self.builder.as_mut().expect("vocabulary known")
    }
}

fn vocabulary(line: usize, rest: &str) -> Result<Vec<String>, ModelError> {
    let names: Vec<String> = rest.split_whitespace().map(str::to_string).collect();
    if names.is_empty() {
        return Err(syntax(line, "empty vocabulary"));
    }
    for (i, n) in names.iter().enumerate() {
        if names[..i].contains(n) {
            return Err(syntax(line, format!("duplicate name {n:?}")));
        }
    }
    Ok(names)
}

fn lookup_name(names: &[String], tok: &str) -> Option<usize> {
    names
        .iter()
        .position(|n| n == tok)
        .or_else(|| tok.parse::<usize>().ok().filter(|&i| i < names.len()))
}

fn number(line: usize, tok: &str) -> Result<f64, ModelError> {
    tok.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| syntax(line, format!("expected a number, found {tok:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::model::{AVOID_LABEL, REACH_LABEL};

    #[test]
    fn minimal_document() {
        let m = parse_model("pomdp\nstates: 1\nactions: stay\nobservations: z\nstart: 0:1\nT: 0 stay 0 1\nO: 0 z 1\n").unwrap();
        assert_eq!((m.num_states(), m.num_actions()), (1, 1));
    }

    #[test]
    fn t1_document() {
        let m = parse_model(fixtures::T1).unwrap();
        assert_eq!(m.num_states(), 4);
        assert_eq!(m.num_observations(), 3);
        assert_eq!(m.label(REACH_LABEL), Some(&[3][..]));
        assert_eq!(m.label(AVOID_LABEL), Some(&[2][..]));
        assert_eq!(m.transition_prob(0, 1, 2), 1.0);
        assert_eq!(m.obs_prob(2, m.obs_id("v").unwrap()), 1.0);
    }

    #[test]
    fn short_transition_row_is_rejected() {
        let text = "pomdp\nstates: 2\nactions: a\nobservations: z\nstart: 0:1\nT: 0 a 1 0.9\nT: 1 a 1 1\nO: 0 z 1\nO: 1 z 1\n";
        let err = parse_model(text).unwrap_err();
        assert!(err.to_string().contains("transition distribution"), "{err}");
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let text = "pomdp\nstates: 2\nactions: a\nobservations: z\nT: 0 a 1\n";
        assert_eq!(
            parse_model(text).unwrap_err(),
            ModelError::Syntax { line: 5, message: "`T` expects 4 fields, found 3".into() }
        );
        let err = parse_model("states: 1\n").unwrap_err();
        assert!(matches!(err, ModelError::Syntax { line: 1, .. }));
        let err = parse_model("pomdp\nstates: 1\nactions: a\nobservations: z\nT: 0 b 0 1\n").unwrap_err();
        assert!(err.to_string().contains("unknown action"), "{err}");
    }

    #[test]
    fn directives_may_precede_vocabularies() {
        let text = "# comment\npomdp\nstart: s:1\nT: s go s 1\nO: s z 1\nstates: 1 s\nactions: go\nobservations: z\n";
        let m = parse_model(text).unwrap();
        assert_eq!(m.state_name(0), "s");
    }

    #[test]
    fn fixtures_round_trip() {
        for m in [fixtures::t1(), fixtures::t2()] {
            assert_eq!(parse_model(&serialize_model(&m)).unwrap(), m);
        }
    }
}
