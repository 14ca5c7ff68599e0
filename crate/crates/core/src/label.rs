use core::fmt;

/// Anonymized subscriber identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct UserId(pub u64);

impl fmt::Display for UserId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl From<u64> for UserId {
    fn from(v: u64) -> Self {
        UserId(v)
    }
}

/// Subscription type. The numeric encoding (0 = prepaid, 1 = postpaid) is
/// the label value used by the labeling energy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum SubscriptionLabel {
    Prepaid = 0,
    Postpaid = 1,
}

impl SubscriptionLabel {
    pub const ALL: [SubscriptionLabel; 2] = [SubscriptionLabel::Prepaid, SubscriptionLabel::Postpaid];

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    #[inline]
    pub fn from_index(i: usize) -> Self {
        if i == 0 {
            SubscriptionLabel::Prepaid
        } else {
            SubscriptionLabel::Postpaid
        }
    }

    #[inline]
    pub fn flip(self) -> Self {
        match self {
            SubscriptionLabel::Prepaid => SubscriptionLabel::Postpaid,
            SubscriptionLabel::Postpaid => SubscriptionLabel::Prepaid,
        }
    }

    /// `-1` for prepaid, `+1` for postpaid.
    #[inline]
    pub fn sign(self) -> f64 {
        match self {
            SubscriptionLabel::Prepaid => -1.0,
            SubscriptionLabel::Postpaid => 1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SubscriptionLabel::Prepaid => "prepaid",
            SubscriptionLabel::Postpaid => "postpaid",
        }
    }

    /// Accepts `prepaid`/`postpaid` (any case) or `0`/`1`.
    pub fn parse(s: &str) -> Option<Self> {
        let s = s.trim();
        if s == "0" || s.eq_ignore_ascii_case("prepaid") {
            Some(SubscriptionLabel::Prepaid)
        } else if s == "1" || s.eq_ignore_ascii_case("postpaid") {
            Some(SubscriptionLabel::Postpaid)
        } else {
            None
        }
    }
}

impl fmt::Display for SubscriptionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}
