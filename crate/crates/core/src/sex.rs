use std::fmt;

/// Biological sex label used for the two population components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sex {
    Male,
    Female,
}

impl Sex {
    pub const BOTH: [Sex; 2] = [Sex::Male, Sex::Female];

    /// CSV label, `m` or `f`.
    pub fn label(self) -> &'static str {
        match self {
            Sex::Male => "m",
            Sex::Female => "f",
        }
    }

    pub fn parse_label(s: &str) -> Option<Sex> {
        match s {
            "m" => Some(Sex::Male),
            "f" => Some(Sex::Female),
            _ => None,
        }
    }
}

impl fmt::Display for Sex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// A pair of per-sex values; male is always the first component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SexPair<V> {
    pub male: V,
    pub female: V,
}

impl<V> SexPair<V> {
    pub fn new(male: V, female: V) -> Self {
        SexPair { male, female }
    }

    pub fn get(&self, sex: Sex) -> &V {
        match sex {
            Sex::Male => &self.male,
            Sex::Female => &self.female,
        }
    }

    pub fn get_mut(&mut self, sex: Sex) -> &mut V {
        match sex {
            Sex::Male => &mut self.male,
            Sex::Female => &mut self.female,
        }
    }

    pub fn map<W>(&self, mut f: impl FnMut(&V) -> W) -> SexPair<W> {
        SexPair {
            male: f(&self.male),
            female: f(&self.female),
        }
    }

    pub fn try_map<W, E>(&self, mut f: impl FnMut(Sex, &V) -> Result<W, E>) -> Result<SexPair<W>, E> {
        Ok(SexPair {
            male: f(Sex::Male, &self.male)?,
            female: f(Sex::Female, &self.female)?,
        })
    }

    pub fn as_ref(&self) -> SexPair<&V> {
        SexPair {
            male: &self.male,
            female: &self.female,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (Sex, &V)> {
        [(Sex::Male, &self.male), (Sex::Female, &self.female)].into_iter()
    }
}

impl<V: Clone> SexPair<V> {
    pub fn splat(v: V) -> Self {
        SexPair {
            male: v.clone(),
            female: v,
        }
    }
}
