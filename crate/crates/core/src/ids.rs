//! Typed indices into the partition arenas.

use std::fmt;

macro_rules! id_type {
    ($name:ident, $prefix:literal) => {
        #[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(pub u32);

        impl $name {
            #[inline]
            pub fn index(self) -> usize {
                self.0 as usize
            }
            #[inline]
            pub(crate) fn from_index(i: usize) -> Self {
                $name(u32::try_from(i).expect("arena index overflow"))
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, concat!($prefix, "{}"), self.0)
            }
        }
    };
}

id_type!(PrismId, "P");
id_type!(IntervalId, "I");
id_type!(SimplexId, "S");
id_type!(VertexId, "v");
id_type!(NodeId, "n");
