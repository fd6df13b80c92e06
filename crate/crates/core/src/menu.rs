use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One menu entry: certification threshold (or quantity) and its price.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct MenuItem {
    pub quality: f64,
    pub price: f64,
}

impl MenuItem {
    pub const TRIVIAL: MenuItem = MenuItem {
        quality: 0.0,
        price: 0.0,
    };

    pub fn new(quality: f64, price: f64) -> Self {
        Self { quality, price }
    }

    pub fn is_trivial(&self) -> bool {
        self.quality == 0.0
    }
}

impl From<[f64; 2]> for MenuItem {
    fn from([quality, price]: [f64; 2]) -> Self {
        Self { quality, price }
    }
}

impl From<MenuItem> for [f64; 2] {
    fn from(item: MenuItem) -> Self {
        [item.quality, item.price]
    }
}

impl From<(f64, f64)> for MenuItem {
    fn from((quality, price): (f64, f64)) -> Self {
        Self { quality, price }
    }
}

/// A normalized menu: qualities strictly increasing, first item `(0, 0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<MenuItem>", into = "Vec<MenuItem>")]
pub struct Menu {
    items: Vec<MenuItem>,
}

impl TryFrom<Vec<MenuItem>> for Menu {
    type Error = Error;

    fn try_from(items: Vec<MenuItem>) -> Result<Self> {
        normalize_menu(items, f64::INFINITY)
    }
}

impl From<Menu> for Vec<MenuItem> {
    fn from(menu: Menu) -> Self {
        menu.items
    }
}

impl Menu {
    pub fn trivial() -> Self {
        Self {
            items: vec![MenuItem::TRIVIAL],
        }
    }

    /// Builds a menu from `(quality, price)` pairs without a quality cap.
    pub fn from_pairs<I: IntoIterator<Item = (f64, f64)>>(pairs: I) -> Result<Self> {
        normalize_menu(pairs.into_iter().map(MenuItem::from), f64::INFINITY)
    }

    pub fn items(&self) -> &[MenuItem] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    /// Always false; the trivial item is always present.
    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Number of non-trivial items.
    pub fn nontrivial_len(&self) -> usize {
        self.items.len() - 1
    }

    pub fn nontrivial(&self) -> &[MenuItem] {
        &self.items[1..]
    }

    /// Prices non-decreasing in quality.
    pub fn is_monotone(&self) -> bool {
        self.items.windows(2).all(|w| w[0].price <= w[1].price)
    }

    /// Keeps the items whose index satisfies `keep`; the trivial item stays.
    pub fn retain_indices<F: Fn(usize) -> bool>(&self, keep: F) -> Menu {
        let items = self
            .items
            .iter()
            .enumerate()
            .filter(|(i, _)| *i == 0 || keep(*i))
            .map(|(_, it)| *it)
            .collect();
        Menu { items }
    }

    pub fn pairs(&self) -> Vec<(f64, f64)> {
        self.items.iter().map(|i| (i.quality, i.price)).collect()
    }
}

/// Canonical form: sorted by quality, trivial item inserted, duplicate
/// qualities collapsed onto their lowest price.
pub fn normalize_menu<I: IntoIterator<Item = MenuItem>>(raw: I, q_max: f64) -> Result<Menu> {
    let mut items: Vec<MenuItem> = raw.into_iter().collect();
    for it in &items {
        if !(it.quality >= 0.0 && it.quality <= q_max) {
            return Err(Error::Domain(format!(
                "quality {} outside [0, {}]",
                it.quality, q_max
            )));
        }
        if !it.price.is_finite() {
            return Err(Error::Domain(format!("non-finite price at quality {}", it.quality)));
        }
    }
    items.push(MenuItem::TRIVIAL);
    items.sort_by(|a, b| a.quality.total_cmp(&b.quality).then(a.price.total_cmp(&b.price)));
    items.dedup_by(|later, earlier| later.quality == earlier.quality);
    // a non-free quality-0 entry is shadowed by the free one
    items[0] = MenuItem::TRIVIAL;
    Ok(Menu { items })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn inserts_trivial_item() {
        let m = Menu::from_pairs([(1.0, 0.5)]).unwrap();
        assert_eq!(m.pairs(), vec![(0.0, 0.0), (1.0, 0.5)]);
    }

    #[test]
    fn duplicate_quality_keeps_lower_price() {
        let m = Menu::from_pairs([(0.5, 0.3), (0.5, 0.2), (0.0, 0.0)]).unwrap();
        assert_eq!(m.pairs(), vec![(0.0, 0.0), (0.5, 0.2)]);
    }

    #[test]
    fn sorting_preserves_non_monotone_prices() {
        let m = Menu::from_pairs([(0.8, 0.1), (0.2, 0.4), (0.0, 0.0)]).unwrap();
        assert_eq!(m.pairs(), vec![(0.0, 0.0), (0.2, 0.4), (0.8, 0.1)]);
        assert!(!m.is_monotone());
    }

    #[test]
    fn rejects_out_of_range_quality() {
        let err = normalize_menu([MenuItem::new(1.5, 0.1)], 1.0).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
        assert!(normalize_menu([MenuItem::new(-0.1, 0.1)], 1.0).is_err());
    }

    #[test]
    fn json_is_array_of_pairs() {
        let m: Menu = serde_json::from_str("[[1, 0.5], [0, 0]]").unwrap();
        assert_eq!(serde_json::to_string(&m).unwrap(), "[[0.0,0.0],[1.0,0.5]]");
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(raw in prop::collection::vec((0.0f64..2.0, -1.0f64..1.0), 0..12)) {
            let once = Menu::from_pairs(raw).unwrap();
            let twice = normalize_menu(once.items().iter().copied(), f64::INFINITY).unwrap();
            prop_assert_eq!(&once, &twice);
            prop_assert_eq!(once.items()[0], MenuItem::TRIVIAL);
            prop_assert!(once.items().windows(2).all(|w| w[0].quality < w[1].quality));
        }
    }
}
