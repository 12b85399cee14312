#include "seneca/toy_corpus.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "seneca/rng.hpp"

namespace seneca::toy {

namespace {

struct Person {
  std::string first, last;
  bool female;
  std::string role;

  std::string full() const { return first + " " + last; }
  std::string titled() const { return (female ? "Ms " : "Mr ") + last; }
  std::string pronoun() const { return female ? "She" : "He"; }
};

const std::vector<std::string> kMale = {"Bertie", "John", "Patrick", "Michael", "David", "Sean", "Thomas", "Kevin"};
const std::vector<std::string> kFemale = {"Mary", "Anne", "Sarah", "Helen", "Claire", "Laura", "Grace", "Ruth"};
const std::vector<std::string> kSurnames = {"Ahern", "Robinson", "Murphy", "Kelly", "Walsh", "Byrne",
                                            "Doyle", "Brennan", "Quinn", "Nolan", "Burke", "Lynch"};
const std::vector<std::string> kRoles = {"minister", "senator", "mayor", "governor", "chairman", "director"};
const std::vector<std::string> kThings = {"plan",     "bill",     "budget", "report", "deal",   "proposal",
                                          "contract", "project", "scheme", "treaty", "merger", "inquiry"};
const std::vector<std::string> kDays = {"Monday", "Tuesday", "Wednesday", "Thursday", "Friday"};
const std::vector<std::string> kFillers = {
    "Traffic was heavy in the morning .",    "Rain fell across the region .",
    "Shares were flat in early trading .",   "Crowds gathered outside despite the cold .",
    "Few expected such a busy week .",       "Temperatures dropped sharply overnight .",
    "Local radio carried the news all day .", "Ferries were delayed by high winds .",
    "Hotels reported strong bookings .",     "Fuel prices rose again last week ."};

// Verb forms for the same event: article past tense and summary past tense.
struct Verb {
  std::string article, summary;
};
const std::vector<Verb> kIntroduce = {{"announced", "announced"}, {"unveiled", "unveiled"}, {"launched", "launched"}};
const std::vector<Verb> kOppose = {{"criticized", "criticized"}, {"attacked", "attacked"}, {"questioned", "questioned"}};
const std::vector<Verb> kBack = {{"backed", "backed"}, {"welcomed", "welcomed"}, {"endorsed", "endorsed"}};

std::string indefinite(const std::string& noun) {
  return (std::string("aeiou").find(noun.front()) == std::string::npos ? "a " : "an ") + noun;
}

template <class T>
const T& pick(Rng& rng, const std::vector<T>& items) {
  return items[rng.index(items.size())];
}

std::vector<Person> cast(Rng& rng, std::size_t n) {
  std::vector<std::string> surnames = kSurnames;
  std::vector<std::string> roles = kRoles;
  rng.shuffle(surnames);
  rng.shuffle(roles);
  std::vector<Person> people;
  for (std::size_t i = 0; i < n; ++i) {
    bool female = rng.uniform() < 0.5;
    people.push_back({pick(rng, female ? kFemale : kMale), surnames[i], female, roles[i]});
  }
  return people;
}

std::vector<std::string> distinct_things(Rng& rng, std::size_t n) {
  std::vector<std::string> things = kThings;
  rng.shuffle(things);
  things.resize(n);
  return things;
}

struct Event {
  std::vector<std::string> article;  // one or two sentences
  std::string summary;
};

// Chain P1 -T1- P2 -T2- P3 -T3- P1'. Each event mentions two neighbouring links.
std::vector<Event> chain(Rng& rng) {
  auto people = cast(rng, 3);
  auto things = distinct_things(rng, 3);
  const auto& p1 = people[0];
  const auto& p2 = people[1];
  const auto& p3 = people[2];
  std::vector<Event> events;

  const auto& v1 = pick(rng, kIntroduce);
  events.push_back({{p1.full() + " , the " + p1.role + " , " + v1.article + " the " + things[0] + " on " +
                         pick(rng, kDays) + " .",
                     p1.pronoun() + " said the " + things[0] + " would create jobs ."},
                    p1.last + " " + v1.summary + " the " + things[0] + " ."});

  const auto& v2 = pick(rng, kOppose);
  events.push_back({{"The " + things[0] + " was " + v2.article + " by " + p2.full() + " , " + indefinite(p2.role) + " ."},
                    "the " + things[0] + " was " + v2.summary + " by " + p2.last + " ."});

  events.push_back({{p2.titled() + " proposed a new " + things[1] + " instead .",
                     p2.pronoun() + " said the " + things[1] + " was cheaper ."},
                    p2.last + " proposed a new " + things[1] + " ."});

  const auto& v4 = pick(rng, kBack);
  events.push_back({{"The " + things[1] + " was " + v4.article + " by " + p3.full() + " , the " + p3.role +
                     " of the region ."},
                    "the " + things[1] + " was " + v4.summary + " by " + p3.last + " ."});

  events.push_back({{p3.titled() + " will present " + indefinite(things[2]) + " next month ."},
                    p3.last + " will present " + indefinite(things[2]) + " ."});
  return events;
}

}  // namespace

std::vector<text::RawArticle> make_toy_corpus(std::uint64_t seed, std::size_t size) {
  if (size == 0) throw std::invalid_argument("make_toy_corpus: size must be at least 1");
  Rng rng(seed);
  std::vector<text::RawArticle> out;
  for (std::size_t n = 0; n < size; ++n) {
    text::RawArticle a;
    a.id = "toy-" + std::to_string(seed) + "-" + std::to_string(n);
    auto events = chain(rng);
    std::size_t summary_len = 3 + rng.index(2);
    for (std::size_t e = 0; e < events.size(); ++e) {
      // Second sentences of an event are optional detail.
      a.article.push_back(events[e].article[0]);
      if (events[e].article.size() > 1 && rng.uniform() < 0.6) a.article.push_back(events[e].article[1]);
      if (rng.uniform() < 0.45) a.article.push_back(pick(rng, kFillers));
      if (e < summary_len) a.summary.push_back(events[e].summary);
    }
    out.push_back(std::move(a));
  }
  return out;
}

std::vector<text::RawArticle> make_planted_corpus(std::uint64_t seed, std::size_t size) {
  if (size == 0) throw std::invalid_argument("make_planted_corpus: size must be at least 1");
  Rng rng(seed);
  std::vector<text::RawArticle> out;
  for (std::size_t n = 0; n < size; ++n) {
    text::RawArticle a;
    a.id = "planted-" + std::to_string(seed) + "-" + std::to_string(n);
    auto events = chain(rng);
    std::vector<std::string> body;
    for (const auto& e : events) body.push_back(e.article[0]);
    for (std::size_t f = 0; f < 2; ++f) body.push_back(pick(rng, kFillers));
    rng.shuffle(body);
    body.resize(5);
    auto extra = chain(rng);
    const auto& planted = extra[rng.index(extra.size())].summary;
    std::size_t at = 1 + rng.index(body.size());
    body.insert(body.begin() + static_cast<std::ptrdiff_t>(at), planted);
    a.article = body;
    a.summary = {planted};
    out.push_back(std::move(a));
  }
  return out;
}

std::size_t planted_index(const text::RawArticle& article) {
  for (std::size_t i = 0; i < article.article.size(); ++i)
    if (!article.summary.empty() && article.article[i] == article.summary.front()) return i;
  throw std::invalid_argument("planted_index: article '" + article.id + "' has no planted sentence");
}

std::vector<text::Article> tokenize_corpus(const std::vector<text::RawArticle>& raw) {
  std::vector<text::Article> out;
  out.reserve(raw.size());
  for (const auto& r : raw) out.push_back(text::Article::from_raw(r.id, r.article, r.summary));
  return out;
}

}  // namespace seneca::toy
