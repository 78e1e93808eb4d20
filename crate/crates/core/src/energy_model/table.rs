use std::collections::BTreeMap;
use std::fmt;
use std::marker::PhantomData;
use std::ops::{Index, IndexMut};

use serde::de::{self, Deserializer, MapAccess, Visitor};
use serde::ser::{SerializeMap, Serializer};
use serde::{Deserialize, Serialize};

/// Square block sizes handled by the model and the codec.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BlockSize {
    S4,
    S8,
    S16,
    S32,
}

impl BlockSize {
    pub const ALL: [BlockSize; 4] = [BlockSize::S4, BlockSize::S8, BlockSize::S16, BlockSize::S32];

    pub fn from_len(n: usize) -> Option<Self> {
        match n {
            4 => Some(BlockSize::S4),
            8 => Some(BlockSize::S8),
            16 => Some(BlockSize::S16),
            32 => Some(BlockSize::S32),
            _ => None,
        }
    }

    pub fn len(self) -> usize {
        4 << self.index()
    }

    pub fn log2(self) -> u32 {
        2 + self.index() as u32
    }

    pub fn index(self) -> usize {
        self as usize
    }

    fn label(self) -> &'static str {
        ["4", "8", "16", "32"][self.index()]
    }
}

/// Row key of a [`SizeTable`].
pub trait RowKey: Copy + Eq + fmt::Debug + 'static {
    const ALL: [Self; 3];
    fn index(self) -> usize;
    fn label(self) -> &'static str;

    fn from_label(s: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|k| k.label() == s)
    }
}

/// Intra prediction mode class as seen by the energy model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModeClass {
    Dc,
    Planar,
    Angular,
}

impl RowKey for ModeClass {
    const ALL: [Self; 3] = [ModeClass::Dc, ModeClass::Planar, ModeClass::Angular];
    fn index(self) -> usize {
        self as usize
    }
    fn label(self) -> &'static str {
        ["DC", "Planar", "Angular"][self as usize]
    }
}

/// Colour component.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Component {
    Y,
    U,
    V,
}

impl Component {
    pub fn is_luma(self) -> bool {
        self == Component::Y
    }
}

impl RowKey for Component {
    const ALL: [Self; 3] = [Component::Y, Component::U, Component::V];
    fn index(self) -> usize {
        self as usize
    }
    fn label(self) -> &'static str {
        ["Y", "U", "V"][self as usize]
    }
}

/// Dense `(row key × block size)` table.
///
/// Every cell always exists, so the "same key set" precondition between a
/// profile and a count vector holds by construction. The JSON form is a
/// nested object (`{"DC": {"4": .., "8": .., ..}, ..}`) and parsing rejects
/// both missing and unknown keys.
#[derive(Clone, Copy, PartialEq)]
pub struct SizeTable<K, T> {
    cells: [[T; 4]; 3],
    _key: PhantomData<K>,
}

impl<K: RowKey, T: Copy + Default> Default for SizeTable<K, T> {
    fn default() -> Self {
        Self::filled(T::default())
    }
}

impl<K: RowKey, T: Copy> SizeTable<K, T> {
    pub fn filled(v: T) -> Self {
        SizeTable {
            cells: [[v; 4]; 3],
            _key: PhantomData,
        }
    }

    pub fn from_fn(mut f: impl FnMut(K, BlockSize) -> T) -> Self {
        let cells = K::ALL.map(|k| BlockSize::ALL.map(|s| f(k, s)));
        SizeTable {
            cells,
            _key: PhantomData,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (K, BlockSize, T)> + '_ {
        K::ALL
            .into_iter()
            .flat_map(move |k| BlockSize::ALL.into_iter().map(move |s| (k, s, self[(k, s)])))
    }

    pub fn map<U: Copy>(&self, mut f: impl FnMut(T) -> U) -> SizeTable<K, U> {
        SizeTable {
            cells: self.cells.map(|row| row.map(&mut f)),
            _key: PhantomData,
        }
    }

    pub fn zip_with<U: Copy, V: Copy>(
        &self,
        other: &SizeTable<K, U>,
        mut f: impl FnMut(T, U) -> V,
    ) -> SizeTable<K, V> {
        SizeTable::from_fn(|k, s| f(self[(k, s)], other[(k, s)]))
    }
}

impl<K: RowKey, T> Index<(K, BlockSize)> for SizeTable<K, T> {
    type Output = T;
    fn index(&self, (k, s): (K, BlockSize)) -> &T {
        &self.cells[k.index()][s.index()]
    }
}

impl<K: RowKey, T> IndexMut<(K, BlockSize)> for SizeTable<K, T> {
    fn index_mut(&mut self, (k, s): (K, BlockSize)) -> &mut T {
        &mut self.cells[k.index()][s.index()]
    }
}

impl<K: RowKey, T: fmt::Debug + Copy> fmt::Debug for SizeTable<K, T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut m = f.debug_map();
        for k in K::ALL {
            m.entry(&k.label(), &self.cells[k.index()]);
        }
        m.finish()
    }
}

struct Row<'a, T>(&'a [T; 4]);

impl<T: Serialize> Serialize for Row<'_, T> {
    fn serialize<S: Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        let mut m = ser.serialize_map(Some(4))?;
        for s in BlockSize::ALL {
            m.serialize_entry(s.label(), &self.0[s.index()])?;
        }
        m.end()
    }
}

impl<K: RowKey, T: Serialize> Serialize for SizeTable<K, T> {
    fn serialize<S: Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        let mut m = ser.serialize_map(Some(3))?;
        for k in K::ALL {
            m.serialize_entry(k.label(), &Row(&self.cells[k.index()]))?;
        }
        m.end()
    }
}

impl<'de, K: RowKey, T: Deserialize<'de> + Copy + Default> Deserialize<'de> for SizeTable<K, T> {
    fn deserialize<D: Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        struct TableVisitor<K, T>(PhantomData<(K, T)>);

        impl<'de, K: RowKey, T: Deserialize<'de> + Copy + Default> Visitor<'de> for TableVisitor<K, T> {
            type Value = SizeTable<K, T>;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                let keys: Vec<_> = K::ALL.iter().map(|k| k.label()).collect();
                write!(f, "an object keyed by {keys:?}, each mapping sizes 4/8/16/32")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<Self::Value, A::Error> {
                let mut cells = [[T::default(); 4]; 3];
                let mut seen = [false; 3];
                while let Some(key) = map.next_key::<String>()? {
                    let k = K::from_label(&key)
                        .ok_or_else(|| de::Error::unknown_field(&key, &[]))?;
                    if std::mem::replace(&mut seen[k.index()], true) {
                        return Err(de::Error::duplicate_field(k.label()));
                    }
                    let row: BTreeMap<String, T> = map.next_value()?;
                    for (size_key, v) in &row {
                        let size = size_key
                            .parse::<usize>()
                            .ok()
                            .and_then(BlockSize::from_len)
                            .filter(|s| s.label() == size_key)
                            .ok_or_else(|| de::Error::unknown_field(size_key, &["4", "8", "16", "32"]))?;
                        cells[k.index()][size.index()] = *v;
                    }
                    if row.len() != 4 {
                        return Err(de::Error::custom(format!(
                            "row {:?} must have exactly the sizes 4, 8, 16, 32",
                            k.label()
                        )));
                    }
                }
                if let Some(missing) = K::ALL.iter().find(|k| !seen[k.index()]) {
                    return Err(de::Error::missing_field(missing.label()));
                }
                Ok(SizeTable {
                    cells,
                    _key: PhantomData,
                })
            }
        }

        de.deserialize_map(TableVisitor(PhantomData))
    }
}
