#include "mathforge/synthesis.hpp"

namespace mathforge {

namespace {

const InContextExample kGsm8k{
    "Weng earns $12 an hour for babysitting. Yesterday, she just did 50 minutes of babysitting. How much did she earn?",
    {},
    R"(### General Question
Weng earns ${n1} an hour for babysitting. Yesterday, she just did {n2} minutes of babysitting. How much did she earn?

### Extracted Numbers
n1 = 12
n2 = 50

### Unified Program
```python
def solution(n1, n2):
    """Compute the pay for a babysitting session billed by the hour.

    :param n1: hourly wage in dollars
    :param n2: minutes worked
    :return: the amount earned in dollars
    """
    per_minute = n1 / 60  # wage for one minute
    earned = per_minute * n2  # minutes worked times the per-minute wage
    return earned  # dollars earned
```

### Constraints
n1: int in [1, 100]; the hourly wage is a positive whole number of dollars
n2: int in [1, 600]; minutes worked must be a positive integer
)"};

const InContextExample kAqua{
    "A car travels 240 km in 4 hours. What is its average speed?",
    {"A)40 km/h", "B)50 km/h", "C)60 km/h", "D)70 km/h", "E)80 km/h"},
    R"(### General Question
A car travels {n1} km in {n2} hours. What is its average speed?

### Extracted Numbers
n1 = 240
n2 = 4

### Unified Program
```python
def solution(n1, n2):
    """Compute an average speed from a distance and a travel time.

    :param n1: distance travelled in km
    :param n2: travel time in hours
    :return: the average speed in km/h
    """
    speed = n1 / n2  # distance divided by time
    return speed  # km per hour
```

### Constraints
n1: int in [10, 1000]; distance is a positive integer
n2: int in [1, 20]; hours must be positive
)"};

const InContextExample kMath{
    "Compute the value of $x$ if $5x - 7 = 18$.",
    {},
    R"(### General Question
Compute the value of $x$ if ${n1}x - {n2} = {n3}$.

### Extracted Numbers
n1 = 5
n2 = 7
n3 = 18

### Unified Program
```python
from fractions import Fraction


def solution(n1, n2, n3):
    """Solve the linear equation a*x - b = c for x.

    :param n1: coefficient of x
    :param n2: constant subtracted on the left side
    :param n3: right-hand side
    :return: the value of x as an exact fraction
    """
    x = Fraction(n3 + n2, n1)  # move the constant across, then divide by the coefficient
    return x  # exact solution
```

### Constraints
n1: int in [1, 12]; the coefficient is a positive integer
n2: int in [0, 50]; non-negative constant
n3: int in [0, 100]; non-negative right-hand side
)"};

const InContextExample kNumGlue{
    "Joan had 9 blue balloons but gained 2 more. How many blue balloons does Joan have now?",
    {},
    R"(### General Question
Joan had {n1} blue balloons but gained {n2} more. How many blue balloons does Joan have now?

### Extracted Numbers
n1 = 9
n2 = 2

### Unified Program
```python
def solution(n1, n2):
    """Count the balloons after gaining some more.

    :param n1: balloons at the start
    :param n2: balloons gained
    :return: int, the number of balloons now
    """
    total = n1 + n2  # start plus gained
    return total  # balloons now
```

### Constraints
n1: int in [1, 100]; balloons are counted with whole numbers
n2: int in [1, 100]; balloons are counted with whole numbers
)"};

const InContextExample kMathQa{
    "a shopkeeper sells an article for rs 720 at a profit of 20 % . find the cost price .",
    {"a ) 500", "b ) 550", "c ) 600", "d ) 650", "e ) 700"},
    R"(### General Question
a shopkeeper sells an article for rs {n1} at a profit of {n2} % . find the cost price .

### Extracted Numbers
n1 = 720
n2 = 20

### Unified Program
```python
def solution(n1, n2):
    """Recover the cost price from a selling price and a profit percentage.

    :param n1: selling price in rupees
    :param n2: profit in percent of the cost price
    :return: the cost price in rupees
    """
    factor = 1 + n2 / 100  # selling price as a multiple of the cost price
    cost = n1 / factor  # undo the markup
    return cost  # cost price
```

### Constraints
n1: int in [100, 5000]; the selling price is a positive integer
n2: int in [1, 100]; the profit percentage is a positive integer
)"};

const InContextExample kTheoremQa{
    "What net force in newtons accelerates a 2 kg object at 3 meters per second squared?",
    {},
    R"(### General Question
What net force in newtons accelerates a {n1} kg object at {n2} meters per second squared?

### Extracted Numbers
n1 = 2
n2 = 3

### Unified Program
```python
def solution(n1, n2):
    """Apply Newton's second law.

    :param n1: mass in kilograms
    :param n2: acceleration in meters per second squared
    :return: the net force in newtons
    """
    force = n1 * n2  # F = m * a
    return force  # newtons
```

### Constraints
n1: int in [1, 100]; mass must be positive
n2: int in [1, 50]; acceleration must be positive
)"};

const InContextExample kDeepMind{
    "Calculate 7 * 6 - 5.",
    {},
    R"(### General Question
Calculate {n1} * {n2} - {n3}.

### Extracted Numbers
n1 = 7
n2 = 6
n3 = 5

### Unified Program
```python
def solution(n1, n2, n3):
    """Evaluate a product minus a constant.

    :param n1: first factor
    :param n2: second factor
    :param n3: amount subtracted
    :return: int, the value of the expression
    """
    product = n1 * n2  # multiply first
    return product - n3  # then subtract
```

### Constraints
n1: int in [1, 20]; integer factor
n2: int in [1, 20]; integer factor
n3: int in [0, 50]; integer amount
)"};

} // namespace

const InContextExample& example_for(Source source) {
    switch (source) {
    case Source::AquaRat: return kAqua;
    case Source::Gsm8k: return kGsm8k;
    case Source::Math: return kMath;
    case Source::NumGlue: return kNumGlue;
    case Source::MathQa: return kMathQa;
    case Source::TheoremQa: return kTheoremQa;
    case Source::DeepMindMath: return kDeepMind;
    }
    return kGsm8k;
}

} // namespace mathforge
