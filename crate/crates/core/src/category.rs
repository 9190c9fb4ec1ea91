//! Composite food x condition labels and the category registry.
//!
//! Registry names follow `<food>__<condition>`, e.g. `apple__rot` or
//! `mango__normal`. The `supercategory` of every entry repeats the food token.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};

pub const NAME_SEPARATOR: &str = "__";
pub const NORMAL_TOKEN: &str = "normal";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FoodType {
    Apple,
    Apricot,
    Banana,
    Cantaloupe,
    Cherry,
    Lychee,
    Mango,
    Orange,
    Peach,
    Pear,
    Plum,
    Strawberry,
    Watermelon,
}

impl FoodType {
    pub const ALL: [FoodType; 13] = [
        FoodType::Apple,
        FoodType::Apricot,
        FoodType::Banana,
        FoodType::Cantaloupe,
        FoodType::Cherry,
        FoodType::Lychee,
        FoodType::Mango,
        FoodType::Orange,
        FoodType::Peach,
        FoodType::Pear,
        FoodType::Plum,
        FoodType::Strawberry,
        FoodType::Watermelon,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FoodType::Apple => "apple",
            FoodType::Apricot => "apricot",
            FoodType::Banana => "banana",
            FoodType::Cantaloupe => "cantaloupe",
            FoodType::Cherry => "cherry",
            FoodType::Lychee => "lychee",
            FoodType::Mango => "mango",
            FoodType::Orange => "orange",
            FoodType::Peach => "peach",
            FoodType::Pear => "pear",
            FoodType::Plum => "plum",
            FoodType::Strawberry => "strawberry",
            FoodType::Watermelon => "watermelon",
        }
    }
}

impl fmt::Display for FoodType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FoodType {
    type Err = ();

    fn from_str(s: &str) -> std::result::Result<Self, ()> {
        FoodType::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Condition {
    Normal,
    Defect(String),
}

impl Condition {
    pub fn token(&self) -> &str {
        match self {
            Condition::Normal => NORMAL_TOKEN,
            Condition::Defect(d) => d,
        }
    }

    pub fn is_defect(&self) -> bool {
        matches!(self, Condition::Defect(_))
    }
}

/// Serializes as its registry name.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Category {
    pub food: FoodType,
    pub condition: Condition,
}

impl Category {
    pub fn new(food: FoodType, condition: Condition) -> Self {
        Category { food, condition }
    }

    pub fn normal(food: FoodType) -> Self {
        Category::new(food, Condition::Normal)
    }

    pub fn defect(food: FoodType, defect: impl Into<String>) -> Self {
        Category::new(food, Condition::Defect(defect.into()))
    }

    /// Registry name, `<food>__<condition>`.
    pub fn name(&self) -> String {
        format!("{}{NAME_SEPARATOR}{}", self.food, self.condition.token())
    }

    pub fn with_food(&self, food: FoodType) -> Category {
        Category::new(food, self.condition.clone())
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{NAME_SEPARATOR}{}", self.food, self.condition.token())
    }
}

impl From<Category> for String {
    fn from(c: Category) -> String {
        c.name()
    }
}

impl TryFrom<String> for Category {
    type Error = Error;

    fn try_from(s: String) -> Result<Category> {
        split_name(&s)
    }
}

/// Split a name by the naming convention without consulting a registry.
fn split_name(name: &str) -> Result<Category> {
    let (food_tok, cond_tok) = name
        .split_once(NAME_SEPARATOR)
        .ok_or_else(|| Error::MalformedCategoryName(name.to_string()))?;
    let food = food_tok
        .parse::<FoodType>()
        .map_err(|()| Error::UnknownFood {
            token: food_tok.to_string(),
            name: name.to_string(),
        })?;
    let condition = match cond_tok {
        "" => {
            return Err(Error::UnknownCondition {
                token: String::new(),
                name: name.to_string(),
            })
        }
        NORMAL_TOKEN => Condition::Normal,
        other => Condition::Defect(other.to_string()),
    };
    Ok(Category { food, condition })
}

/// Resolve a registry name into its food and condition.
///
/// `normal` always maps to [`Condition::Normal`]; any other condition token
/// must appear (paired with this food) in `registry`.
pub fn parse_category_name(name: &str, registry: &CategoryRegistry) -> Result<Category> {
    let category = split_name(name)?;
    if category.condition.is_defect() && registry.id_of(&category).is_none() {
        return Err(Error::UnknownCondition {
            token: category.condition.token().to_string(),
            name: name.to_string(),
        });
    }
    Ok(category)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CategoryEntry {
    pub id: u64,
    pub name: String,
    pub supercategory: String,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

/// Bidirectional map between COCO category ids and [`Category`] values.
#[derive(Clone, Debug, Default)]
pub struct CategoryRegistry {
    entries: Vec<CategoryEntry>,
    by_id: HashMap<u64, Category>,
    by_category: HashMap<Category, u64>,
}

impl PartialEq for CategoryRegistry {
    fn eq(&self, other: &Self) -> bool {
        self.entries == other.entries
    }
}

impl CategoryRegistry {
    pub fn from_entries(entries: Vec<CategoryEntry>) -> Result<Self> {
        let mut by_id = HashMap::with_capacity(entries.len());
        let mut by_category = HashMap::with_capacity(entries.len());
        for (i, e) in entries.iter().enumerate() {
            let record = format!("categories[{i}]");
            let category = split_name(&e.name).map_err(|err| Error::Load {
                record: record.clone(),
                field: "name",
                message: err.to_string(),
            })?;
            if e.supercategory != category.food.as_str() {
                return Err(Error::Load {
                    record,
                    field: "supercategory",
                    message: format!(
                        "`{}` does not match food token `{}`",
                        e.supercategory, category.food
                    ),
                });
            }
            if by_id.insert(e.id, category.clone()).is_some() {
                return Err(Error::Load {
                    record,
                    field: "id",
                    message: format!("duplicate category id {}", e.id),
                });
            }
            if by_category.insert(category, e.id).is_some() {
                return Err(Error::Load {
                    record,
                    field: "name",
                    message: format!("duplicate category name `{}`", e.name),
                });
            }
        }
        Ok(CategoryRegistry {
            entries,
            by_id,
            by_category,
        })
    }

    /// Registry with ids assigned `1..` in iteration order.
    pub fn from_categories<I: IntoIterator<Item = Category>>(categories: I) -> Result<Self> {
        let entries = categories
            .into_iter()
            .enumerate()
            .map(|(i, c)| CategoryEntry {
                id: i as u64 + 1,
                name: c.name(),
                supercategory: c.food.as_str().to_string(),
                extra: Map::new(),
            })
            .collect();
        Self::from_entries(entries)
    }

    pub fn entries(&self) -> &[CategoryEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn category(&self, id: u64) -> Option<&Category> {
        self.by_id.get(&id)
    }

    pub fn id_of(&self, category: &Category) -> Option<u64> {
        self.by_category.get(category).copied()
    }

    pub fn contains(&self, category: &Category) -> bool {
        self.by_category.contains_key(category)
    }

    /// Categories in registry order.
    pub fn categories(&self) -> impl Iterator<Item = &Category> + '_ {
        self.entries.iter().map(move |e| &self.by_id[&e.id])
    }
}
