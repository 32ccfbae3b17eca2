//! Itemized bound reports.

use std::fmt;

use serde::ser::{SerializeMap, SerializeStruct};
use serde::{Serialize, Serializer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Normal,
    Poisson,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Wasserstein,
    Kolmogorov,
    TotalVariation,
}

/// Which bound produced a report. [`Theorem::tag`] is the stable identifier
/// written to JSON and accepted on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Theorem {
    /// `√(2/π) E|1−Z| + 2 E[Σ (𝔡_i F)² |E[𝔇_i F|𝓕_i]|]`.
    WassersteinExact,
    /// `√(2/π)|1−E F²| + √(2/π)√Var Z + 2𝓛_3`.
    WassersteinRelaxed,
    /// `4𝓛_3` for normalized sums of independent terms.
    WassersteinSum,
    /// `E|1−Z| + B_1 + B_2`.
    KolmogorovExact,
    /// `√Var Z/σ² + √Var Z̄/σ²` plus the fourth-moment bound on `B_2`.
    KolmogorovFourthMoment,
    /// Same, with the `3√n 𝓛_4` bound on `B_2`.
    KolmogorovRootN,
    /// Same, with the sixth-moment bound on `B_2`.
    KolmogorovSixthMoment,
    /// Wasserstein bound through the dependency sets `A_k`.
    LocalWasserstein,
    /// Kolmogorov bound through the dependency sets `A_k`.
    LocalKolmogorov,
    /// Explicit-constant Wasserstein bound for 2-runs.
    RunWasserstein,
    /// Explicit-constant Kolmogorov bound for 2-runs.
    RunKolmogorov,
    PoissonTvExact,
    PoissonTvRelaxed,
    PoissonWassersteinExact,
    PoissonWassersteinRelaxed,
}

impl Theorem {
    pub const ALL: [Theorem; 15] = [
        Theorem::WassersteinExact,
        Theorem::WassersteinRelaxed,
        Theorem::WassersteinSum,
        Theorem::KolmogorovExact,
        Theorem::KolmogorovFourthMoment,
        Theorem::KolmogorovRootN,
        Theorem::KolmogorovSixthMoment,
        Theorem::LocalWasserstein,
        Theorem::LocalKolmogorov,
        Theorem::RunWasserstein,
        Theorem::RunKolmogorov,
        Theorem::PoissonTvExact,
        Theorem::PoissonTvRelaxed,
        Theorem::PoissonWassersteinExact,
        Theorem::PoissonWassersteinRelaxed,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Theorem::WassersteinExact => "normal.wasserstein.exact",
            Theorem::WassersteinRelaxed => "normal.wasserstein.relaxed",
            Theorem::WassersteinSum => "normal.wasserstein.sum",
            Theorem::KolmogorovExact => "normal.kolmogorov.exact",
            Theorem::KolmogorovFourthMoment => "normal.kolmogorov.fourth_moment",
            Theorem::KolmogorovRootN => "normal.kolmogorov.root_n",
            Theorem::KolmogorovSixthMoment => "normal.kolmogorov.sixth_moment",
            Theorem::LocalWasserstein => "normal.wasserstein.local",
            Theorem::LocalKolmogorov => "normal.kolmogorov.local",
            Theorem::RunWasserstein => "normal.wasserstein.run",
            Theorem::RunKolmogorov => "normal.kolmogorov.run",
            Theorem::PoissonTvExact => "poisson.tv.exact",
            Theorem::PoissonTvRelaxed => "poisson.tv.relaxed",
            Theorem::PoissonWassersteinExact => "poisson.wasserstein.exact",
            Theorem::PoissonWassersteinRelaxed => "poisson.wasserstein.relaxed",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.tag() == tag)
    }

    pub fn target(self) -> Target {
        match self {
            Theorem::PoissonTvExact
            | Theorem::PoissonTvRelaxed
            | Theorem::PoissonWassersteinExact
            | Theorem::PoissonWassersteinRelaxed => Target::Poisson,
            _ => Target::Normal,
        }
    }

    pub fn metric(self) -> Metric {
        match self {
            Theorem::WassersteinExact
            | Theorem::WassersteinRelaxed
            | Theorem::WassersteinSum
            | Theorem::LocalWasserstein
            | Theorem::RunWasserstein
            | Theorem::PoissonWassersteinExact
            | Theorem::PoissonWassersteinRelaxed => Metric::Wasserstein,
            Theorem::PoissonTvExact | Theorem::PoissonTvRelaxed => Metric::TotalVariation,
            _ => Metric::Kolmogorov,
        }
    }

    /// Whether the bound integrates exact expectations over the whole grid
    /// (and therefore needs a full profile rather than a summary).
    pub fn needs_full_grid(self) -> bool {
        matches!(
            self,
            Theorem::WassersteinExact
                | Theorem::KolmogorovExact
                | Theorem::PoissonTvExact
                | Theorem::PoissonWassersteinExact
        )
    }
}

impl fmt::Display for Theorem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl Serialize for Theorem {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.tag())
    }
}

/// Named reals kept in insertion order; serialized as a JSON object.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Components(Vec<(String, f64)>);

impl Components {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, name: impl Into<String>, value: f64) -> &mut Self {
        self.0.push((name.into(), value));
        self
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.0.iter().find(|(k, _)| k == name).map(|&(_, v)| v)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Sum of all entries.
    pub fn total(&self) -> f64 {
        self.0.iter().map(|(_, v)| v).sum()
    }
}

impl Serialize for Components {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(Some(self.0.len()))?;
        for (k, v) in &self.0 {
            m.serialize_entry(k, v)?;
        }
        m.end()
    }
}

/// An assembled bound.
///
/// `value` is the sum of `components`. `diagnostics` carries related
/// quantities (alternative relaxations, inputs such as `σ²`) that do not enter
/// the sum.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub theorem: Theorem,
    pub components: Components,
    pub diagnostics: Components,
    pub value: f64,
    pub standardized: bool,
    pub theta: Option<f64>,
    pub notes: Vec<String>,
}

impl BoundReport {
    /// Report whose value is the sum of `components`.
    pub fn from_components(theorem: Theorem, components: Components, standardized: bool) -> Self {
        let value = components.total();
        Self {
            theorem,
            components,
            diagnostics: Components::new(),
            value,
            standardized,
            theta: None,
            notes: Vec::new(),
        }
    }

    pub fn with_diagnostics(mut self, diagnostics: Components) -> Self {
        self.diagnostics = diagnostics;
        self
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = Some(theta);
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    pub fn target(&self) -> Target {
        self.theorem.target()
    }

    pub fn metric(&self) -> Metric {
        self.theorem.metric()
    }
}

impl Serialize for BoundReport {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("BoundReport", 8)?;
        st.serialize_field("theorem", &self.theorem)?;
        st.serialize_field("target", &self.target())?;
        st.serialize_field("metric", &self.metric())?;
        if let Some(theta) = self.theta {
            st.serialize_field("theta", &theta)?;
        }
        st.serialize_field("standardized", &self.standardized)?;
        st.serialize_field("components", &self.components)?;
        if !self.diagnostics.is_empty() {
            st.serialize_field("diagnostics", &self.diagnostics)?;
        }
        st.serialize_field("value", &self.value)?;
        if !self.notes.is_empty() {
            st.serialize_field("notes", &self.notes)?;
        }
        st.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tags_round_trip() {
        for t in Theorem::ALL {
            assert_eq!(Theorem::from_tag(t.tag()), Some(t));
        }
        assert_eq!(Theorem::from_tag("nope"), None);
        assert_eq!(Theorem::PoissonTvExact.metric(), Metric::TotalVariation);
        assert_eq!(Theorem::RunKolmogorov.target(), Target::Normal);
    }

    #[test]
    fn serialization_keeps_component_order() {
        let mut c = Components::new();
        c.push("b", 1.0).push("a", 0.5);
        let r = BoundReport::from_components(Theorem::PoissonTvRelaxed, c, false).with_theta(1.0);
        assert_eq!(r.value, 1.5);
        let json = serde_json::to_string(&r).unwrap();
        assert_eq!(
            json,
            r#"{"theorem":"poisson.tv.relaxed","target":"poisson","metric":"total_variation","theta":1.0,"standardized":false,"components":{"b":1.0,"a":0.5},"value":1.5}"#
        );
    }
}
