/** Adds two numbers. */
public static int add(int a, int b) {
    return a + b;
}
----
// returns the absolute value
private int abs(int value) {
    if (value < 0) {
        return -value; // negate
    }
    return value;
}
----
public final String greet(String name) throws IllegalArgumentException {
    if (name == null) {
        throw new IllegalArgumentException("name");
    }
    String message = "Hello, " + name;
    return message;
}
----
protected synchronized void increment() {
    count++;
}
----
public int sum(int[] values) {
    int total = 0;
    for (int v : values) {
        total += v;
    }
    return total;
}
----
/* counts vowels */
static int countVowels(String text) {
    int count = 0;
    for (int i = 0; i < text.length(); i++) {
        char c = Character.toLowerCase(text.charAt(i));
        if ("aeiou".indexOf(c) >= 0) {
            count++;
        }
    }
    return count;
}
----
public List<String> readLines(String path) throws IOException {
    List<String> lines = new ArrayList<>();
    try (BufferedReader reader = new BufferedReader(new FileReader(path))) {
        String line;
        while ((line = reader.readLine()) != null) {
            lines.add(line);
        }
    }
    return lines;
}
----
@Override
public boolean equals(Object other) {
    if (this == other) {
        return true;
    }
    if (!(other instanceof Point)) {
        return false;
    }
    Point p = (Point) other;
    return x == p.x && y == p.y;
}
----
public long factorial(int n) {
    if (n <= 1) {
        return 1;
    }
    return n * factorial(n - 1);
}
----
public int fib(int n) {
    return n < 2 ? n : this.fib(n - 1) + this.fib(n - 2);
}
----
public void setName(String name) {
    this.name = name;
}
----
public String getName() {
    return name;
}
----
public static <T> T firstOrDefault(List<T> items, T fallback) {
    return items.isEmpty() ? fallback : items.get(0);
}
----
public int parseOr(String text, int fallback) {
    try {
        return Integer.parseInt(text);
    } catch (NumberFormatException e) {
        return fallback;
    }
}
----
public Map<String, Integer> countWords(String text) {
    Map<String, Integer> counts = new HashMap<>();
    for (String word : text.split("\\s+")) {
        counts.merge(word, 1, Integer::sum);
    }
    return counts;
}
----
public List<Integer> evens(List<Integer> numbers) {
    return numbers.stream().filter(n -> n % 2 == 0).collect(Collectors.toList());
}
----
public int maxOf(int first, int second, int third) {
    int best = first;
    if (second > best) {
        best = second;
    }
    if (third > best) {
        best = third;
    }
    return best;
}
----
public void swap(int[] array, int i, int j) {
    int tmp = array[i];
    array[i] = array[j];
    array[j] = tmp;
}
----
public boolean isPalindrome(String s) {
    int left = 0;
    int right = s.length() - 1;
    while (left < right) {
        if (s.charAt(left) != s.charAt(right)) {
            return false;
        }
        left++;
        right--;
    }
    return true;
}
----
public String reverse(String input) {
    StringBuilder builder = new StringBuilder(input);
    return builder.reverse().toString();
}
----
public double average(double[] data) {
    if (data.length == 0) {
        return 0.0;
    }
    double sum = 0;
    for (double d : data) {
        sum += d;
    }
    return sum / data.length;
}
----
public void close() throws IOException {
    if (stream != null) {
        stream.close();
        stream = null;
    }
}
----
public int indexOf(Object o) {
    for (int i = 0; i < size; i++) {
        if (o.equals(elements[i])) {
            return i;
        }
    }
    return -1;
}
----
public void clear() {
    for (int i = 0; i < count; i++) {
        buffer[i] = null;
    }
    count = 0;
}
----
public int[][] transpose(int[][] matrix) {
    int rows = matrix.length;
    int cols = matrix[0].length;
    int[][] result = new int[cols][rows];
    for (int r = 0; r < rows; r++) {
        for (int c = 0; c < cols; c++) {
            result[c][r] = matrix[r][c];
        }
    }
    return result;
}
----
public String join(List<String> parts, String separator) {
    StringBuilder sb = new StringBuilder();
    for (int i = 0; i < parts.size(); i++) {
        if (i > 0) {
            sb.append(separator);
        }
        sb.append(parts.get(i));
    }
    return sb.toString();
}
----
public boolean containsKey(String key) {
    return map.containsKey(key);
}
----
public Object get(String key) {
    try {
        return map.get(key);
    } catch (NullPointerException e) {
        return null;
    }
}
----
public int compareTo(Version other) {
    if (major != other.major) {
        return major - other.major;
    }
    return minor - other.minor;
}
----
public void run() {
    Runnable task = () -> System.out.println("tick");
    executor.submit(task);
}
----
public int gcd(int a, int b) {
    while (b != 0) {
        int t = b;
        b = a % b;
        a = t;
    }
    return a;
}
----
public int power(int base, int exponent) {
    int result = 1;
    for (int i = 0; i < exponent; i++) {
        result *= base;
    }
    return result;
}
----
public void log(String format, Object... args) {
    // forwards to the logger
    logger.info(String.format(format, args));
}
----
public byte[] toBytes(String text) throws UnsupportedEncodingException {
    return text.getBytes("UTF-8");
}
----
public int countIf(List<String> items, Predicate<String> test) {
    int n = 0;
    for (String item : items) {
        if (test.test(item)) {
            n++;
        }
    }
    return n;
}
----
public String describe(int code) {
    String label;
    switch (code) {
        case 0:
            label = "zero";
            break;
        case 1:
            label = "one";
            break;
        default:
            label = "many";
    }
    return label;
}
----
public void sleepQuietly(long millis) {
    try {
        Thread.sleep(millis);
    } catch (InterruptedException ignored) {
        Thread.currentThread().interrupt();
    }
}
----
public int[] copyRange(int[] source, int from, int to) {
    int[] copy = new int[to - from];
    System.arraycopy(source, from, copy, 0, to - from);
    return copy;
}
----
public boolean allPositive(int[] xs) {
    for (int x : xs) {
        if (x <= 0) {
            return false;
        }
    }
    return true;
}
----
public List<String> upper(List<String> words) {
    List<String> out = new ArrayList<>();
    words.forEach(w -> out.add(w.toUpperCase()));
    return out;
}
----
public String repeat(String s, int times) {
    String acc = "";
    int k = 0;
    do {
        acc = acc + s;
        k++;
    } while (k < times);
    return acc;
}
----
public int binarySearch(int[] sorted, int key) {
    int lo = 0;
    int hi = sorted.length - 1;
    while (lo <= hi) {
        int mid = (lo + hi) >>> 1;
        if (sorted[mid] < key) {
            lo = mid + 1;
        } else if (sorted[mid] > key) {
            hi = mid - 1;
        } else {
            return mid;
        }
    }
    return -(lo + 1);
}
----
public void addAll(Collection<? extends E> items) {
    for (E item : items) {
        add(item);
    }
}
----
/**
 * Returns a copy of the list without nulls.
 * @param input the list
 */
public <T> List<T> compact(List<T> input) {
    List<T> result = new ArrayList<>(input.size());
    for (T element : input) {
        if (element != null) {
            result.add(element);
        }
    }
    return result;
}
----
public int hashCode() {
    int h = 17;
    h = 31 * h + x;
    h = 31 * h + y;
    return h;
}
----
public String toString() {
    return "Term(" + field + ":" + text + ")";
}
----
public boolean isEmpty() {
    return size == 0;
}
----
public void writeAll(List<String> lines, Writer writer) throws IOException {
    for (String line : lines) {
        writer.write(line);
        writer.write('\n');
    }
    writer.flush();
}
----
public Optional<String> findFirstLong(List<String> names, int min) {
    return names.stream().filter(name -> name.length() >= min).findFirst();
}
----
public int checkedDivide(int numerator, int denominator) throws ArithmeticException {
    if (denominator == 0) {
        throw new ArithmeticException("division by zero");
    }
    int quotient = numerator / denominator;
    return quotient;
}
