#pragma once

// Bundled word lists used for surrogate generation and for the dictionary
// recognizers. Ordering is fixed; seeded draws index into these arrays, so
// reordering entries changes every generated surrogate.

#include <array>
#include <string_view>

namespace veil::lex {

inline constexpr std::array<std::string_view, 48> kFirstNames = {
    "David",   "Maria",   "James",   "Linda",  "Robert",  "Susan",
    "Michael", "Karen",   "William", "Nancy",  "Richard", "Lisa",
    "Joseph",  "Betty",   "Thomas",  "Sandra", "Charles", "Ashley",
    "Daniel",  "Emily",   "Matthew", "Donna",  "Anthony", "Carol",
    "Mark",    "Michelle","Steven",  "Amanda", "Andrew",  "Melissa",
    "Paul",    "Deborah", "Joshua",  "Laura",  "Kevin",   "Sarah",
    "Brian",   "Jessica", "George",  "Helen",  "Edward",  "Amy",
    "Ronald",  "Anna",    "Timothy", "Ruth",   "Jason",   "Brenda",
};

inline constexpr std::array<std::string_view, 48> kLastNames = {
    "Smith",    "Johnson",  "Williams", "Brown",   "Jones",    "Garcia",
    "Miller",   "Davis",    "Rodriguez","Martinez","Hernandez","Lopez",
    "Gonzalez", "Wilson",   "Anderson", "Taylor",  "Moore",    "Jackson",
    "Martin",   "Lee",      "Perez",    "White",   "Harris",   "Sanchez",
    "Clark",    "Ramirez",  "Lewis",    "Robinson","Walker",   "Young",
    "Allen",    "King",     "Wright",   "Scott",   "Torres",   "Nguyen",
    "Hill",     "Flores",   "Green",    "Adams",   "Nelson",   "Baker",
    "Hall",     "Rivera",   "Campbell", "Mitchell","Carter",   "Roberts",
};

inline constexpr std::array<std::string_view, 32> kStreetNames = {
    "Oak",      "Maple",   "Cedar",    "Elm",      "Pine",     "Walnut",
    "Chestnut", "Spruce",  "Birch",    "Willow",   "Aspen",    "Juniper",
    "Magnolia", "Sycamore","Poplar",   "Hickory",  "Laurel",   "Linden",
    "Alder",    "Hawthorn","Dogwood",  "Redwood",  "Cypress",  "Sequoia",
    "Granite",  "Summit",  "Meadow",   "Prairie",  "Canyon",   "Harbor",
    "Lakeview", "Ridgeline",
};

inline constexpr std::array<std::string_view, 12> kStreetSuffixes = {
    "St", "Ave", "Rd", "Blvd", "Lane", "Dr",
    "Ct", "Way", "Place", "Terrace", "Loop", "Row",
};

inline constexpr std::array<std::string_view, 8> kEmailDomains = {
    "hotmail.com", "gmail.com",  "yahoo.com",   "outlook.com",
    "aol.com",     "icloud.com", "mail.com",    "proton.me",
};

}  // namespace veil::lex
